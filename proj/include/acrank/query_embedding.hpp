#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "acrank/io.hpp"
#include "acrank/session_corpus.hpp"

namespace acrank {

inline constexpr std::int64_t kSessionGapMs = 10 * 60 * 1000;
// Only searches from the last this-many days (counted back from the newest
// event in the input) feed the embedding corpus. 0 keeps everything.
inline constexpr int kDefaultHorizonDays = 60;

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QueryEvent {
  std::string query;
  std::int64_t ts_ms = 0;
};

// Splits a time-ordered event stream wherever two consecutive events are more
// than kSessionGapMs apart. Queries that normalize to nothing are skipped and
// runs shorter than two tokens are dropped.
std::vector<std::vector<std::string>> sessionize(
    const std::vector<QueryEvent>& events, std::int64_t max_gap_ms = kSessionGapMs);

// Drops events older than horizon_days before the newest one.
void apply_horizon(std::vector<QueryEvent>& events, int horizon_days);

// Groups a session log by user and returns every user's past searches plus
// submitted queries, sorted by time, as sessionized token sequences.
std::vector<std::vector<std::string>> documents_from_sessions(
    const std::vector<ACSession>& sessions, int horizon_days = kDefaultHorizonDays);

struct VocabEntry {
  std::string token;
  std::uint64_t count = 0;
};

struct Corpus {
  std::vector<VocabEntry> vocabulary;          // index -> entry
  std::vector<std::vector<std::uint32_t>> documents;

  std::size_t token_count() const;
};

// Tokens below min_count are removed from the documents; documents that end
// up with fewer than two tokens are dropped. Vocabulary order is by count
// descending, then token.
Corpus build_corpus(const std::vector<std::vector<std::string>>& documents,
                    std::uint64_t min_count);

// Walker alias table over a discrete distribution.
class AliasSampler {
 public:
  explicit AliasSampler(std::span<const double> weights);
  std::uint32_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// Unigram counts raised to `power`, normalized.
std::vector<double> unigram_distribution(const Corpus& corpus, double power);

struct SkipgramConfig {
  int dim = 50;
  int window = 5;
  int negatives = 5;
  int epochs = 30;
  double initial_learning_rate = 0.025;
  std::uint64_t min_count = 2;
  double unigram_power = 0.75;
  std::uint64_t seed = 1;
  int threads = 1;  // > 1 enables lock-free updates (non-deterministic)

  void validate() const;
};

// Dense row-major vectors plus the vocabulary they belong to.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<std::size_t> index_of(std::string_view token) const;

  std::span<float> target(std::size_t i) { return {&target_[i * dim_], static_cast<std::size_t>(dim_)}; }
  std::span<const float> target(std::size_t i) const { return {&target_[i * dim_], static_cast<std::size_t>(dim_)}; }
  std::span<float> context(std::size_t i) { return {&context_[i * dim_], static_cast<std::size_t>(dim_)}; }
  std::span<const float> context(std::size_t i) const { return {&context_[i * dim_], static_cast<std::size_t>(dim_)}; }

  bool has_context_vectors() const { return !context_.empty(); }
  void drop_context_vectors() { context_.clear(); context_.shrink_to_fit(); }
  void allocate_context_vectors() { context_.assign(target_.size(), 0.0f); }

  // Looks up a raw query after normalize_query; nullopt means OOV.
  std::optional<std::span<const float>> lookup(std::string_view raw_query) const;

  bool operator==(const EmbeddingTable& other) const;

 private:
  int dim_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> target_;
  std::vector<float> context_;
};

// Per-epoch mean loss per (target, context) update, for monitoring.
struct SkipgramReport {
  std::vector<double> epoch_loss;
};

EmbeddingTable train_skipgram(const Corpus& corpus, const SkipgramConfig& config,
                              SkipgramReport* report = nullptr);

// ℓ(x) = log(1 + e^{-x}) and its derivative -σ(-x), both overflow-safe.
double logistic_loss(double x);
double logistic_loss_grad(double x);

// Loss of one positive (target, context) observation and its negatives,
// evaluated on raw vectors. Exposed for gradient checking.
double skipgram_example_loss(std::span<const double> target,
                             std::span<const double> context,
                             const std::vector<std::vector<double>>& negatives);
// Gradients w.r.t. target, context and each negative, same layout as inputs.
void skipgram_example_grad(std::span<const double> target,
                           std::span<const double> context,
                           const std::vector<std::vector<double>>& negatives,
                           std::vector<double>& d_target,
                           std::vector<double>& d_context,
                           std::vector<std::vector<double>>& d_negatives);

struct CosineResult {
  double value = 0.0;
  bool defined = true;  // false when either vector is all zero
};

// Throws EmbeddingError on dimension mismatch.
CosineResult cosine(std::span<const float> a, std::span<const float> b);
CosineResult cosine(std::span<const double> a, std::span<const double> b);

// Text format: "count dim" header, then one "token v1 ... vdim" row per
// token. When context vectors are written, a "#context" line follows the
// target rows and precedes the same number of context rows.
void save_embeddings(const EmbeddingTable& table, std::ostream& out,
                     bool include_context = false);
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings_file(const std::string& path);

}  // namespace acrank
