#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acrank {

inline constexpr std::size_t kMaxDisplayDepth = 10;

struct PastQuery {
  std::string query;
  std::int64_t ts_ms = 0;

  bool operator==(const PastQuery&) const = default;
};

struct Impression {
  std::string prefix;
  std::vector<std::string> candidates;  // display order, rank 1 first

  bool operator==(const Impression&) const = default;
};

// One customer's keystroke-to-submission journey.
struct ACSession {
  std::string session_id;
  std::string user_id;
  std::int64_t ts_ms = 0;
  std::vector<PastQuery> past_queries;  // searched before this session
  std::vector<Impression> impressions;
  std::string submitted_query;
  double gmv = 0.0;

  bool operator==(const ACSession&) const = default;
};

struct RankedQuery {
  std::string query;
  int rank = 0;  // 1-based display position
};

struct LabeledImpression {
  Impression impression;
  std::optional<int> positive_rank;
  std::vector<RankedQuery> negatives;
};

enum class WeightMode { kGmv, kUnit, kLog1pGmv };

WeightMode parse_weight_mode(std::string_view name);
std::string_view to_string(WeightMode mode);
double pair_weight(double gmv, WeightMode mode);

struct TrainingPair {
  std::string session_id;
  std::string prefix;
  std::string positive_query;
  std::string negative_query;
  int rank_p = 0;
  int rank_n = 0;
  double weight = 0.0;
  std::int64_t ts_ms = 0;
  std::vector<PastQuery> context;

  bool operator==(const TrainingPair&) const = default;
};

// ---- session log parsing -------------------------------------------------

class SessionParseError : public std::runtime_error {
 public:
  SessionParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

enum class ParseMode { kStrict, kSkipAndReport };

struct SessionLog {
  std::vector<ACSession> sessions;
  std::vector<LineError> errors;
};

// One JSON object per line; blank lines are ignored. Candidate lists deeper
// than kMaxDisplayDepth are truncated and repeated candidates dropped.
SessionLog parse_session_log(std::istream& in,
                             ParseMode mode = ParseMode::kSkipAndReport);
ACSession parse_session_line(std::string_view line);  // throws std::runtime_error
std::string format_session_line(const ACSession& session);

// ---- labeling and pairs --------------------------------------------------

std::vector<LabeledImpression> label_impressions(const ACSession& session);

std::vector<TrainingPair> extract_pairs(const ACSession& session,
                                        WeightMode weight_mode);

struct CorpusSplit {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> validation;
};

// Chooses round(fraction * #sessions) session ids for the held-out side.
// Selection depends only on the id set and the seed.
std::vector<std::string> choose_held_out_sessions(
    std::vector<std::string> session_ids, double fraction, std::uint64_t seed);

CorpusSplit split_corpus(const std::vector<TrainingPair>& pairs,
                         double validation_fraction, std::uint64_t seed);

std::string format_pair_line(const TrainingPair& pair);
TrainingPair parse_pair_line(std::string_view line);
std::vector<TrainingPair> read_pairs(std::istream& in);

}  // namespace acrank
