#include "acrank/rankers.hpp"

namespace acrank {

NeuralRanker::NeuralRanker(std::string id, std::shared_ptr<const Checkpoint> checkpoint,
                           std::shared_ptr<const StatsStore> stats,
                           std::shared_ptr<const EmbeddingTable> embeddings,
                           bool ignore_context)
    : id_(std::move(id)),
      checkpoint_(std::move(checkpoint)),
      stats_(std::move(stats)),
      embeddings_(std::move(embeddings)),
      ignore_context_(ignore_context) {
  const auto& layout = checkpoint_->layout;
  if (embeddings_->size() > 0 && embeddings_->dim() != layout.embedding_dim) {
    throw LayoutError("embedding dimension " + std::to_string(embeddings_->dim()) +
                      " does not match checkpoint layout embedding_dim " +
                      std::to_string(layout.embedding_dim));
  }
  if (stats_->series_length() != layout.series_length) {
    throw LayoutError("stats series length " + std::to_string(stats_->series_length()) +
                      " does not match checkpoint layout series_length " +
                      std::to_string(layout.series_length));
  }
  if (stats_->half_life_days() != layout.half_life_days) {
    throw LayoutError("stats half-life does not match checkpoint layout half_life_days");
  }
}

std::vector<CandidateFeatures> NeuralRanker::features(const RankRequest& r) const {
  const auto& layout = checkpoint_->layout;
  const ContextState ctx =
      ignore_context_ ? ContextState{}
                      : ContextState::from_history(r.past, r.now_ms, layout.context_length,
                                                   layout.context_ttl_ms);
  std::vector<CandidateFeatures> out;
  out.reserve(r.candidates.size());
  for (const auto& c : r.candidates) {
    out.push_back({c, featurize(c, r.prefix, stats_->get(c), ctx, *embeddings_, layout)});
  }
  return out;
}

RankedList NeuralRanker::rank(const RankRequest& r) const {
  return score_candidates(checkpoint_->params, checkpoint_->network, features(r));
}

}  // namespace acrank
