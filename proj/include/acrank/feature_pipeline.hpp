#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "acrank/query_embedding.hpp"
#include "acrank/session_corpus.hpp"

namespace acrank {

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout parameters shared by featurization, training and serving. Stored in
// every checkpoint so the scorer and the feature code cannot drift apart.
struct FeatureLayout {
  static constexpr int kVersion = 1;
  static constexpr int kDenseLength = 6;

  int series_length = 7;        // H
  int context_length = 3;       // K
  double half_life_days = 7.0;
  std::int64_t context_ttl_ms = 30LL * 60 * 1000;
  int embedding_dim = 50;

  int dense_length() const { return kDenseLength; }
  int context_block_length() const { return context_length + 3; }
  int total_length() const {
    return dense_length() + series_length + context_block_length();
  }
  static const std::vector<std::string>& dense_names();

  bool operator==(const FeatureLayout&) const = default;
};

// Index of the popularity entry inside FeatureVector::dense.
inline constexpr int kDensePopularity = 3;

struct BehaviorStats {
  std::vector<double> daily_counts;  // oldest first, last entry = today
  std::vector<double> daily_gmv;
  double decayed_popularity = 0.0;
  double decayed_gmv = 0.0;
};

// Σ value_d · 2^(−age_d / half_life), age 0 for the last element.
double decayed_aggregate(const std::vector<double>& daily_values,
                         double half_life_days);

// Per-query behavioral statistics keyed by canonical_query. Missing queries
// read as all-zero stats.
class StatsStore {
 public:
  explicit StatsStore(int series_length = 7, double half_life_days = 7.0);

  // Series shorter than H are left-padded with zeros; longer ones keep the
  // most recent H days.
  void put(std::string_view query, std::vector<double> daily_counts,
           std::vector<double> daily_gmv);
  const BehaviorStats& get(std::string_view query) const;
  bool contains(std::string_view query) const;

  int series_length() const { return series_length_; }
  double half_life_days() const { return half_life_days_; }
  const std::map<std::string, BehaviorStats>& entries() const { return stats_; }

 private:
  int series_length_;
  double half_life_days_;
  std::map<std::string, BehaviorStats> stats_;
  BehaviorStats empty_;
};

// {"query": ..., "daily_counts": [H], "daily_gmv": [H]} per line.
StatsStore read_stats(std::istream& in, int series_length = 7,
                      double half_life_days = 7.0);
StatsStore read_stats_file(const std::string& path, int series_length = 7,
                           double half_life_days = 7.0);
void write_stats(const StatsStore& store, std::ostream& out);

// Aggregates every search event (past queries and submitted queries) into
// per-day counts over the H days ending at the latest event day; submitted
// queries also carry their session's GMV.
StatsStore build_stats(const std::vector<ACSession>& sessions, int series_length,
                       double half_life_days);

// Most recent past queries, newest first.
struct ContextState {
  std::vector<PastQuery> recent;

  bool present() const { return !recent.empty(); }

  // Keeps entries with ts in [now - ttl, now], newest first, at most k.
  static ContextState from_history(const std::vector<PastQuery>& past,
                                   std::int64_t now_ms, int k,
                                   std::int64_t ttl_ms);
};

struct FeatureVector {
  // [candidate length, prefix length, smoothed prefix/candidate ratio,
  //  log1p decayed popularity, log1p decayed gmv, exact-prefix flag]
  std::vector<double> dense;
  // log1p daily popularity, oldest first, length H
  std::vector<double> series;
  // [cos to past 1..K, max cos, mean cos, presence flag]
  std::vector<double> context;

  bool operator==(const FeatureVector&) const = default;
};

FeatureVector featurize(std::string_view candidate, std::string_view prefix,
                        const BehaviorStats& stats, const ContextState& ctx,
                        const EmbeddingTable& embeddings,
                        const FeatureLayout& layout);

}  // namespace acrank
