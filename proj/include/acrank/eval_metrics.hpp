#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acrank/session_corpus.hpp"

namespace acrank {

class Ranker;

// One ranked list to be scored against its single relevant query.
struct EvalSample {
  std::vector<std::string> ranked_list;
  std::string target;
  double weight = 1.0;
  bool context_present = false;
};

// Unranked input for evaluate(): an impression plus its ground truth.
struct EvalCase {
  std::string session_id;
  std::int64_t ts_ms = 0;
  std::string prefix;
  std::vector<std::string> candidates;
  std::string target;
  double weight = 1.0;
  std::vector<PastQuery> context;  // newest first, already TTL-filtered
  bool context_present = false;

  bool operator==(const EvalCase&) const = default;
};

std::string format_eval_case_line(const EvalCase& c);
EvalCase parse_eval_case_line(std::string_view line);
std::vector<EvalCase> read_eval_cases(std::istream& in);

// 1-based position of target (canonical equality), or nullopt.
std::optional<int> hit_rank(const std::vector<std::string>& ranked_list,
                            std::string_view target);

// 1/log2(rank + 1): the gain of a single relevant item at `rank`.
double discounted_gain(int rank);

// kWeightedMean: Σ w/rank over Σ w. kPerSample: Σ w/rank over the sample count.
enum class MrrNormalization { kWeightedMean, kPerSample };

// Throws std::domain_error("degenerate weights") when Σw = 0 (weighted mean),
// std::invalid_argument on an empty sample set.
double mrr(std::span<const EvalSample> samples,
           MrrNormalization normalization = MrrNormalization::kWeightedMean);
double ndcg_at_p(std::span<const EvalSample> samples, int p);

struct SliceMetrics {
  std::size_t count = 0;
  double weight_sum = 0.0;
  // Unset when the slice is empty or has zero total weight.
  std::optional<double> mrr, ndcg_at_1, ndcg_at_3;

  bool empty() const { return count == 0; }
};

struct EvalReport {
  std::string ranker_id;
  SliceMetrics all;           // AS
  SliceMetrics with_past;     // SWPS
  SliceMetrics without_past;  // SWOPS
  std::size_t errors = 0;
  std::vector<std::string> error_messages;  // first few only
};

SliceMetrics slice_metrics(std::span<const EvalSample> samples);

// Ranks every case, then computes the three slices. Ranker failures on a
// case are tallied and the case is skipped.
EvalReport evaluate(const Ranker& ranker, std::span<const EvalCase> cases);
EvalReport evaluate_samples(std::string ranker_id, std::span<const EvalSample> samples);

std::string report_json(const std::vector<EvalReport>& reports,
                        const std::string& baseline_id);
// Model × MRR / NDCG@1 / NDCG@3 per slice, with percent deltas vs baseline.
std::string report_table(const std::vector<EvalReport>& reports,
                         const std::string& baseline_id);

}  // namespace acrank
