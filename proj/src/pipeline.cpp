#include "acrank/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "acrank/baseline_rankers.hpp"
#include "acrank/io.hpp"
#include "acrank/manifest.hpp"
#include "acrank/text.hpp"

namespace acrank {

namespace {

std::vector<PastQuery> recent_context(const std::vector<PastQuery>& past, std::int64_t now,
                                      const FeatureLayout& layout) {
  return ContextState::from_history(past, now, layout.context_length, layout.context_ttl_ms)
      .recent;
}

}  // namespace

PreparedData prepare_data(const std::vector<ACSession>& sessions, const PrepareOptions& opt) {
  std::vector<std::string> ids;
  ids.reserve(sessions.size());
  for (const auto& s : sessions) ids.push_back(s.session_id);
  const auto held = choose_held_out_sessions(ids, opt.test_fraction, opt.seed);
  const std::set<std::string> test_ids(held.begin(), held.end());

  PreparedData out;
  std::vector<const ACSession*> test_sessions;
  for (const auto& s : sessions) {
    if (test_ids.count(s.session_id)) {
      test_sessions.push_back(&s);
    } else {
      out.train_sessions.push_back(s);
    }
  }
  out.stats = build_stats(out.train_sessions, opt.layout.series_length, opt.layout.half_life_days);

  std::vector<TrainingPair> pairs;
  for (const auto& s : out.train_sessions) {
    if (opt.gmv_positive_only && !(s.gmv > 0.0)) {
      ++out.zero_gmv_sessions_dropped;
      continue;
    }
    for (auto& p : extract_pairs(s, opt.weight_mode)) {
      p.context = recent_context(p.context, p.ts_ms, opt.layout);
      pairs.push_back(std::move(p));
    }
  }
  auto split = split_corpus(pairs, opt.validation_fraction, opt.seed);
  out.train = std::move(split.train);
  out.validation = std::move(split.validation);

  for (const auto* s : test_sessions) {
    const auto ctx = recent_context(s->past_queries, s->ts_ms, opt.layout);
    for (const auto& li : label_impressions(*s)) {
      if (!li.positive_rank) continue;
      EvalCase c;
      c.session_id = s->session_id;
      c.ts_ms = s->ts_ms;
      c.prefix = li.impression.prefix;
      c.candidates = li.impression.candidates;
      c.target = canonical_query(s->submitted_query);
      c.weight = pair_weight(s->gmv, opt.eval_weight_mode);
      c.context = ctx;
      c.context_present = !ctx.empty();
      out.test.push_back(std::move(c));
    }
  }
  return out;
}

void write_prepared(const PreparedData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto lines = [](const auto& items, auto fmt) {
    std::string s;
    for (const auto& x : items) {
      s += fmt(x);
      s += '\n';
    }
    return s;
  };
  write_file_atomic(dir / PreparedFiles::kTrainPairs, lines(data.train, format_pair_line));
  write_file_atomic(dir / PreparedFiles::kValidationPairs,
                    lines(data.validation, format_pair_line));
  write_file_atomic(dir / PreparedFiles::kEval, lines(data.test, format_eval_case_line));
  write_file_atomic(dir / PreparedFiles::kTrainSessions,
                    lines(data.train_sessions, format_session_line));
  std::ostringstream stats;
  write_stats(data.stats, stats);
  write_file_atomic(dir / PreparedFiles::kStats, stats.str());

  std::ostringstream q;
  q.precision(17);
  for (const auto& [query, pop] : queries_from_stats(data.stats)) q << query << '\t' << pop << '\n';
  write_file_atomic(dir / PreparedFiles::kQueries, q.str());
}

std::vector<ACSession> read_sessions_file(const std::filesystem::path& path, ParseMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return parse_session_log(in, mode).sessions;
}

std::vector<TrainingPair> read_pairs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_pairs(in);
}

std::vector<EvalCase> read_eval_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_eval_cases(in);
}

EmbeddingTable train_query_embeddings(const std::vector<ACSession>& sessions,
                                      const SkipgramConfig& cfg, SkipgramReport* report,
                                      int horizon_days) {
  const auto corpus = build_corpus(documents_from_sessions(sessions, horizon_days), cfg.min_count);
  return train_skipgram(corpus, cfg, report);
}

std::vector<PairExample> featurize_pairs(const std::vector<TrainingPair>& pairs,
                                         const StatsStore& stats,
                                         const EmbeddingTable& embeddings,
                                         const FeatureLayout& layout) {
  std::vector<PairExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto ctx = ContextState::from_history(p.context, p.ts_ms, layout.context_length,
                                                layout.context_ttl_ms);
    PairExample ex;
    ex.positive = featurize(p.positive_query, p.prefix, stats.get(p.positive_query), ctx,
                            embeddings, layout);
    ex.negative = featurize(p.negative_query, p.prefix, stats.get(p.negative_query), ctx,
                            embeddings, layout);
    ex.rank_p = p.rank_p;
    ex.rank_n = p.rank_n;
    ex.weight = p.weight;
    out.push_back(std::move(ex));
  }
  return out;
}

Checkpoint train_checkpoint(const std::vector<TrainingPair>& train,
                            const std::vector<TrainingPair>& validation,
                            const StatsStore& stats, const EmbeddingTable& embeddings,
                            const FeatureLayout& layout, const RankerTrainingOptions& opt) {
  if (embeddings.size() > 0 && embeddings.dim() != layout.embedding_dim) {
    throw LayoutError("embedding dimension " + std::to_string(embeddings.dim()) +
                      " does not match layout embedding_dim " +
                      std::to_string(layout.embedding_dim));
  }
  if (train.empty()) throw TrainingError("no training pairs");
  NetworkConfig net = opt.network;
  const auto sized = NetworkConfig::for_layout(layout);
  net.dense_length = sized.dense_length;
  net.series_length = sized.series_length;
  net.context_length = sized.context_length;

  const auto tr = featurize_pairs(train, stats, embeddings, layout);
  const auto va = featurize_pairs(validation, stats, embeddings, layout);
  auto result = train_ranker(tr, va, net, opt.train);

  Checkpoint ckpt;
  ckpt.network = net;
  ckpt.layout = layout;
  ckpt.params = std::move(result.params);
  ckpt.training.epochs_run = static_cast<int>(result.train_loss.size());
  ckpt.training.best_epoch = result.best_epoch;
  ckpt.training.train_loss = std::move(result.train_loss);
  ckpt.training.validation_loss = std::move(result.validation_loss);
  ckpt.training.seed = opt.train.seed;
  ckpt.training.weight_mode = opt.weight_mode;
  ckpt.training.train_pairs = train.size();
  ckpt.training.validation_pairs = validation.size();
  return ckpt;
}

std::shared_ptr<SuggestService> make_service(const ServiceAssets& a,
                                             std::shared_ptr<SessionContextStore> context) {
  auto index = std::make_shared<const PopularityIndex>(*a.stats);
  std::vector<std::shared_ptr<const Ranker>> rankers = {
      std::make_shared<MpcRanker>(index), std::make_shared<MpgcRanker>(index)};
  std::string version = "baseline";
  std::string default_ranker = "mpc";
  if (a.checkpoint) {
    rankers.push_back(
        std::make_shared<NeuralRanker>("deeppltr", a.checkpoint, a.stats, a.embeddings));
    if (a.ndcg_ablated) {
      rankers.push_back(std::make_shared<NeuralRanker>("deeppltr-ndcg", a.ndcg_ablated,
                                                       a.stats, a.embeddings));
    }
    if (a.context_ablated) {
      rankers.push_back(std::make_shared<NeuralRanker>("context-blind", a.context_ablated,
                                                       a.stats, a.embeddings));
    } else {
      rankers.push_back(std::make_shared<NeuralRanker>("context-blind", a.checkpoint,
                                                       a.stats, a.embeddings, true));
    }
    std::ostringstream bytes;
    save_checkpoint(*a.checkpoint, bytes);
    version = git_blob_sha1(bytes.str()).substr(0, 12);
    default_ranker = "deeppltr";
  }
  auto trie = std::make_shared<const PrefixTrie>(
      PrefixTrie::build(a.queries, a.shortlist_size));
  return std::make_shared<SuggestService>(trie, std::move(rankers), std::move(context),
                                          default_ranker, version);
}

}  // namespace acrank
