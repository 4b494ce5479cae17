#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "acrank/baseline_rankers.hpp"
#include "acrank/checkpoint.hpp"
#include "acrank/feature_pipeline.hpp"
#include "acrank/query_embedding.hpp"
#include "acrank/ranking.hpp"

namespace acrank {

struct RankRequest {
  std::string_view prefix;
  const std::vector<std::string>& candidates;
  const std::vector<PastQuery>& past;  // any order; rankers apply their own TTL/K
  std::int64_t now_ms = 0;
};

// Rankers are immutable once built and safe to call concurrently.
class Ranker {
 public:
  virtual ~Ranker() = default;
  virtual std::string id() const = 0;
  virtual RankedList rank(const RankRequest& request) const = 0;
};

class MpcRanker : public Ranker {
 public:
  explicit MpcRanker(std::shared_ptr<const PopularityIndex> index) : index_(std::move(index)) {}
  std::string id() const override { return "mpc"; }
  RankedList rank(const RankRequest& r) const override { return mpc_rank(r.candidates, *index_); }

 private:
  std::shared_ptr<const PopularityIndex> index_;
};

class MpgcRanker : public Ranker {
 public:
  explicit MpgcRanker(std::shared_ptr<const PopularityIndex> index) : index_(std::move(index)) {}
  std::string id() const override { return "mpgc"; }
  RankedList rank(const RankRequest& r) const override { return mpgc_rank(r.candidates, *index_); }

 private:
  std::shared_ptr<const PopularityIndex> index_;
};

// Featurizes each candidate and scores it with a trained checkpoint. With
// ignore_context set, every request is scored as if it had no past searches.
class NeuralRanker : public Ranker {
 public:
  NeuralRanker(std::string id, std::shared_ptr<const Checkpoint> checkpoint,
               std::shared_ptr<const StatsStore> stats,
               std::shared_ptr<const EmbeddingTable> embeddings,
               bool ignore_context = false);

  std::string id() const override { return id_; }
  RankedList rank(const RankRequest& request) const override;

  std::vector<CandidateFeatures> features(const RankRequest& request) const;
  const Checkpoint& checkpoint() const { return *checkpoint_; }

 private:
  std::string id_;
  std::shared_ptr<const Checkpoint> checkpoint_;
  std::shared_ptr<const StatsStore> stats_;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  bool ignore_context_;
};

}  // namespace acrank
