#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acrank/session_corpus.hpp"

namespace acrank {

// Knobs for the synthetic autocomplete log. The hidden relevance of a query
// for a session is linear:
//
//   U = popularity_weight · log(popularity today) + price_weight · log(price)
//     + trend_weight · trend + context_weight · [topic == recent topic]
//
// and the intended query is drawn with probability ∝ exp(U).
struct SyntheticConfig {
  std::size_t sessions = 4000;
  int days = 14;
  double context_rate = 0.5;      // sessions with recent searches on one topic
  double context_weight = 5.0;
  double popularity_weight = 0.5;
  double price_weight = 1.0;
  double trend_weight = 4.0;
  double logging_noise = 0.7;     // jitter of the logging ranker's order
  // 0: the logging ranker orders by popularity; 1: by the context-free part
  // of U. Values in between blend the two.
  double logging_utility = 0.0;
  double click_decay = 0.8;       // position bias: P(click at r) ∝ decay^(r-1)
  // Sessions where the user submits a candidate from rank 4 or below of a
  // short-prefix list regardless of relevance: a uniformly random one, or
  // the longest one when tail_prefers_longest is set.
  double tail_click_rate = 0.0;
  bool tail_prefers_longest = false;
  double zero_gmv_rate = 0.05;
  std::uint64_t seed = 7;
};

struct SyntheticQuery {
  std::string text;
  int topic = 0;
  double base_popularity = 0.0;
  double price = 0.0;
  double trend = 0.0;  // log-popularity change per day
};

struct SyntheticData {
  std::vector<std::string> topics;
  std::vector<SyntheticQuery> catalog;
  std::vector<ACSession> sessions;  // sorted by ts
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

// Two disjoint groups of queries; each document is a run of queries from one
// group only.
std::vector<std::vector<std::string>> two_cluster_corpus(std::size_t documents,
                                                         std::size_t cluster_size,
                                                         std::size_t doc_length,
                                                         std::uint64_t seed);

}  // namespace acrank
