#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "acrank/checkpoint.hpp"
#include "acrank/eval_metrics.hpp"
#include "acrank/feature_pipeline.hpp"
#include "acrank/neural_ranker.hpp"
#include "acrank/query_embedding.hpp"
#include "acrank/rankers.hpp"
#include "acrank/serving.hpp"
#include "acrank/session_corpus.hpp"

namespace acrank {

// ---- prepare-data ------------------------------------------------------------

struct PrepareOptions {
  double test_fraction = 0.2;        // sessions held out for evaluation
  double validation_fraction = 0.1;  // of the remaining sessions' pairs
  std::uint64_t seed = 1;
  WeightMode weight_mode = WeightMode::kLog1pGmv;  // training pairs
  WeightMode eval_weight_mode = WeightMode::kGmv;  // evaluation cases
  bool gmv_positive_only = false;
  FeatureLayout layout;
};

struct PreparedData {
  std::vector<ACSession> train_sessions;  // everything not held out
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> validation;
  std::vector<EvalCase> test;
  StatsStore stats;
  std::size_t zero_gmv_sessions_dropped = 0;
};

// Splits by session, extracts pairs from the non-test side and one eval case
// per labeled test impression. Behavioral stats see only non-test sessions.
// Pair and case contexts are cut to the K most recent searches within the TTL.
PreparedData prepare_data(const std::vector<ACSession>& sessions, const PrepareOptions& opt);

// Files written by write_prepared, relative to the output directory.
struct PreparedFiles {
  static constexpr const char* kTrainPairs = "train_pairs.jsonl";
  static constexpr const char* kValidationPairs = "validation_pairs.jsonl";
  static constexpr const char* kEval = "eval.jsonl";
  static constexpr const char* kStats = "stats.jsonl";
  static constexpr const char* kQueries = "queries.tsv";
  static constexpr const char* kTrainSessions = "train_sessions.jsonl";
};

void write_prepared(const PreparedData& data, const std::filesystem::path& dir);

std::vector<ACSession> read_sessions_file(const std::filesystem::path& path,
                                          ParseMode mode = ParseMode::kStrict);
std::vector<TrainingPair> read_pairs_file(const std::filesystem::path& path);
std::vector<EvalCase> read_eval_file(const std::filesystem::path& path);

// ---- embeddings --------------------------------------------------------------

EmbeddingTable train_query_embeddings(const std::vector<ACSession>& sessions,
                                      const SkipgramConfig& cfg,
                                      SkipgramReport* report = nullptr,
                                      int horizon_days = kDefaultHorizonDays);

// ---- ranker training ---------------------------------------------------------

std::vector<PairExample> featurize_pairs(const std::vector<TrainingPair>& pairs,
                                         const StatsStore& stats,
                                         const EmbeddingTable& embeddings,
                                         const FeatureLayout& layout);

struct RankerTrainingOptions {
  NetworkConfig network;  // sizes are overridden from the layout
  TrainOptions train;
  std::string weight_mode = "log1p_gmv";
};

Checkpoint train_checkpoint(const std::vector<TrainingPair>& train,
                            const std::vector<TrainingPair>& validation,
                            const StatsStore& stats, const EmbeddingTable& embeddings,
                            const FeatureLayout& layout, const RankerTrainingOptions& opt);

// ---- serving -----------------------------------------------------------------

struct ServiceAssets {
  std::shared_ptr<const StatsStore> stats;
  std::shared_ptr<const EmbeddingTable> embeddings;
  std::shared_ptr<const Checkpoint> checkpoint;             // deeppltr
  std::shared_ptr<const Checkpoint> ndcg_ablated;           // deeppltr-ndcg, optional
  std::shared_ptr<const Checkpoint> context_ablated;        // context-blind, optional
  std::vector<std::pair<std::string, double>> queries;      // trie contents
  std::size_t shortlist_size = PrefixTrie::kDefaultShortlist;
};

// Registers mpc, mpgc, deeppltr, deeppltr-ndcg (if given) and context-blind.
// Without a dedicated context-ablated checkpoint, context-blind scores the
// main checkpoint with an empty context.
std::shared_ptr<SuggestService> make_service(const ServiceAssets& assets,
                                             std::shared_ptr<SessionContextStore> context);

}  // namespace acrank
