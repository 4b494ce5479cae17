#include "acrank/query_embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "acrank/text.hpp"

namespace acrank {

std::vector<std::vector<std::string>> sessionize(
    const std::vector<QueryEvent>& events, std::int64_t max_gap_ms) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> run;
  std::optional<std::int64_t> last_ts;
  auto flush = [&] {
    if (run.size() >= 2) out.push_back(std::move(run));
    run.clear();
  };
  for (const auto& e : events) {
    if (last_ts && e.ts_ms - *last_ts > max_gap_ms) flush();
    last_ts = e.ts_ms;
    if (auto tok = normalize_query(e.query)) run.push_back(std::move(*tok));
  }
  flush();
  return out;
}

void apply_horizon(std::vector<QueryEvent>& events, int horizon_days) {
  if (horizon_days < 0) throw std::invalid_argument("horizon_days must be >= 0");
  if (horizon_days == 0 || events.empty()) return;
  std::int64_t newest = events.front().ts_ms;
  for (const auto& e : events) newest = std::max(newest, e.ts_ms);
  const std::int64_t cutoff = newest - static_cast<std::int64_t>(horizon_days) * 86'400'000;
  std::erase_if(events, [&](const QueryEvent& e) { return e.ts_ms < cutoff; });
}

std::vector<std::vector<std::string>> documents_from_sessions(
    const std::vector<ACSession>& sessions, int horizon_days) {
  std::int64_t newest = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : sessions) {
    newest = std::max(newest, s.ts_ms);
    for (const auto& p : s.past_queries) newest = std::max(newest, p.ts_ms);
  }
  if (horizon_days < 0) throw std::invalid_argument("horizon_days must be >= 0");
  const std::int64_t cutoff = horizon_days == 0
      ? std::numeric_limits<std::int64_t>::min()
      : newest - static_cast<std::int64_t>(horizon_days) * 86'400'000;
  // std::map keeps user order deterministic.
  std::map<std::string, std::set<std::pair<std::int64_t, std::string>>> by_user;
  for (const auto& s : sessions) {
    auto& events = by_user[s.user_id];
    for (const auto& p : s.past_queries) {
      if (p.ts_ms >= cutoff) events.emplace(p.ts_ms, p.query);
    }
    if (s.ts_ms >= cutoff) events.emplace(s.ts_ms, s.submitted_query);
  }
  std::vector<std::vector<std::string>> docs;
  for (const auto& [user, events] : by_user) {
    std::vector<QueryEvent> seq;
    seq.reserve(events.size());
    for (const auto& [ts, q] : events) seq.push_back({q, ts});
    for (auto& d : sessionize(seq)) docs.push_back(std::move(d));
  }
  return docs;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

Corpus build_corpus(const std::vector<std::vector<std::string>>& documents,
                    std::uint64_t min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& d : documents) {
    for (const auto& t : d) ++counts[t];
  }
  Corpus corpus;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) corpus.vocabulary.push_back({tok, n});
  }
  std::stable_sort(corpus.vocabulary.begin(), corpus.vocabulary.end(),
                   [](const VocabEntry& a, const VocabEntry& b) {
                     return a.count > b.count;
                   });
  std::unordered_map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < corpus.vocabulary.size(); ++i) {
    index.emplace(corpus.vocabulary[i].token, static_cast<std::uint32_t>(i));
  }
  for (const auto& d : documents) {
    std::vector<std::uint32_t> ids;
    for (const auto& t : d) {
      if (auto it = index.find(t); it != index.end()) ids.push_back(it->second);
    }
    if (ids.size() >= 2) corpus.documents.push_back(std::move(ids));
  }
  return corpus;
}

AliasSampler::AliasSampler(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("alias sampler needs weights");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("alias sampler weights sum to 0");
  prob_.resize(n);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    auto s = small.back();
    small.pop_back();
    auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (auto i : small) {  // leftovers from rounding
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::uint32_t AliasSampler::sample(Rng& rng) const {
  const auto column = static_cast<std::uint32_t>(uniform_index(rng, prob_.size()));
  return uniform01(rng) < prob_[column] ? column : alias_[column];
}

std::vector<double> unigram_distribution(const Corpus& corpus, double power) {
  std::vector<double> w(corpus.vocabulary.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::pow(static_cast<double>(corpus.vocabulary[i].count), power);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

void SkipgramConfig::validate() const {
  if (dim <= 0 || window <= 0 || negatives <= 0 || epochs <= 0 || threads <= 0 ||
      min_count == 0) {
    throw std::invalid_argument("skipgram counts must be positive");
  }
  if (!(unigram_power > 0.0 && unigram_power <= 1.0)) {
    throw std::invalid_argument("unigram_power must be in (0, 1]");
  }
  if (!(initial_learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
}

// ---- EmbeddingTable --------------------------------------------------------

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, int dim)
    : dim_(dim), tokens_(std::move(tokens)) {
  if (dim <= 0) throw EmbeddingError("embedding dim must be positive");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw EmbeddingError("duplicate token " + tokens_[i]);
    }
  }
  target_.assign(tokens_.size() * static_cast<std::size_t>(dim), 0.0f);
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const float>> EmbeddingTable::lookup(
    std::string_view raw_query) const {
  auto tok = normalize_query(raw_query);
  if (!tok) return std::nullopt;
  auto idx = index_of(*tok);
  if (!idx) return std::nullopt;
  return target(*idx);
}

bool EmbeddingTable::operator==(const EmbeddingTable& o) const {
  return dim_ == o.dim_ && tokens_ == o.tokens_ && target_ == o.target_ &&
         context_ == o.context_;
}

// ---- loss primitives -------------------------------------------------------

double logistic_loss(double x) {
  // log(1 + e^{-x})
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double logistic_loss_grad(double x) {
  // -σ(-x)
  if (x >= 0) {
    const double e = std::exp(-x);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(x));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double skipgram_example_loss(std::span<const double> target,
                             std::span<const double> context,
                             const std::vector<std::vector<double>>& negatives) {
  double loss = logistic_loss(dot(target, context));
  for (const auto& n : negatives) loss += logistic_loss(-dot(target, n));
  return loss;
}

void skipgram_example_grad(std::span<const double> target,
                           std::span<const double> context,
                           const std::vector<std::vector<double>>& negatives,
                           std::vector<double>& d_target,
                           std::vector<double>& d_context,
                           std::vector<std::vector<double>>& d_negatives) {
  const std::size_t d = target.size();
  d_target.assign(d, 0.0);
  d_context.assign(d, 0.0);
  d_negatives.assign(negatives.size(), std::vector<double>(d, 0.0));
  const double g = logistic_loss_grad(dot(target, context));
  for (std::size_t i = 0; i < d; ++i) {
    d_target[i] += g * context[i];
    d_context[i] = g * target[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    // d/ds ℓ(-s) = -ℓ'(-s)
    const double gn = -logistic_loss_grad(-dot(target, negatives[k]));
    for (std::size_t i = 0; i < d; ++i) {
      d_target[i] += gn * negatives[k][i];
      d_negatives[k][i] = gn * target[i];
    }
  }
}

// ---- training --------------------------------------------------------------

namespace {

// Relaxed atomics give Hogwild-style lock-free updates without data-race UB;
// the single-threaded path uses plain loads and stores.
template <bool Shared>
struct Cell {
  static float load(const float& x) {
    if constexpr (Shared) {
      return std::atomic_ref<const float>(x).load(std::memory_order_relaxed);
    } else {
      return x;
    }
  }
  static void store(float& x, float v) {
    if constexpr (Shared) {
      std::atomic_ref<float>(x).store(v, std::memory_order_relaxed);
    } else {
      x = v;
    }
  }
};

struct TrainState {
  const Corpus* corpus;
  const SkipgramConfig* config;
  const AliasSampler* sampler;
  EmbeddingTable* table;
  std::uint64_t total_steps;
  std::atomic<std::uint64_t> processed{0};
};

template <bool Shared>
double run_shard(TrainState& st, const std::vector<std::size_t>& doc_order,
                 std::size_t begin, std::size_t end, Rng& rng,
                 std::uint64_t& pair_count) {
  using C = Cell<Shared>;
  const auto& cfg = *st.config;
  const int dim = cfg.dim;
  std::vector<float> grad(static_cast<std::size_t>(dim));
  std::vector<float> u(static_cast<std::size_t>(dim));
  double loss_sum = 0.0;

  for (std::size_t di = begin; di < end; ++di) {
    const auto& doc = st.corpus->documents[doc_order[di]];
    const double progress = static_cast<double>(st.processed.load(std::memory_order_relaxed)) /
                            static_cast<double>(st.total_steps);
    const double lr = cfg.initial_learning_rate * std::max(1e-4, 1.0 - progress);
    for (std::size_t t = 0; t < doc.size(); ++t) {
      auto target = st.table->target(doc[t]);
      const std::size_t lo = t >= static_cast<std::size_t>(cfg.window) ? t - cfg.window : 0;
      const std::size_t hi = std::min(doc.size() - 1, t + static_cast<std::size_t>(cfg.window));
      for (std::size_t c = lo; c <= hi; ++c) {
        if (c == t) continue;
        for (int i = 0; i < dim; ++i) u[i] = C::load(target[i]);
        std::fill(grad.begin(), grad.end(), 0.0f);
        // label +1 for the observed context, then negatives with label -1
        for (int k = 0; k <= cfg.negatives; ++k) {
          std::uint32_t other;
          double sign;
          if (k == 0) {
            other = doc[c];
            sign = 1.0;
          } else {
            other = st.sampler->sample(rng);
            if (other == doc[c]) continue;
            sign = -1.0;
          }
          auto ctx = st.table->context(other);
          double s = 0.0;
          for (int i = 0; i < dim; ++i) s += static_cast<double>(u[i]) * C::load(ctx[i]);
          loss_sum += logistic_loss(sign * s);
          const double g = sign * logistic_loss_grad(sign * s);  // dℓ/ds
          const auto step = static_cast<float>(lr * g);
          for (int i = 0; i < dim; ++i) {
            const float cv = C::load(ctx[i]);
            grad[i] += step * cv;
            C::store(ctx[i], cv - step * u[i]);
          }
        }
        for (int i = 0; i < dim; ++i) C::store(target[i], C::load(target[i]) - grad[i]);
        ++pair_count;
      }
    }
    st.processed.fetch_add(doc.size(), std::memory_order_relaxed);
  }
  return loss_sum;
}

}  // namespace

EmbeddingTable train_skipgram(const Corpus& corpus, const SkipgramConfig& config,
                              SkipgramReport* report) {
  config.validate();
  if (corpus.vocabulary.empty() || corpus.documents.empty()) {
    throw EmbeddingError("empty-corpus");
  }
  std::vector<std::string> tokens;
  tokens.reserve(corpus.vocabulary.size());
  for (const auto& v : corpus.vocabulary) tokens.push_back(v.token);
  EmbeddingTable table(std::move(tokens), config.dim);
  table.allocate_context_vectors();

  Rng rng(config.seed);
  const float scale = 0.5f / static_cast<float>(config.dim);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (auto& x : table.target(i)) x = static_cast<float>(uniform(rng, -scale, scale));
  }

  const auto dist = unigram_distribution(corpus, config.unigram_power);
  const AliasSampler sampler(dist);

  TrainState st{&corpus, &config, &sampler, &table,
                static_cast<std::uint64_t>(config.epochs) * corpus.token_count()};

  std::vector<std::size_t> order(corpus.documents.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    std::uint64_t pairs = 0;
    if (config.threads == 1) {
      loss = run_shard<false>(st, order, 0, order.size(), rng, pairs);
    } else {
      const auto n = static_cast<std::size_t>(config.threads);
      std::vector<double> losses(n, 0.0);
      std::vector<std::uint64_t> counts(n, 0);
      std::vector<std::thread> workers;
      for (std::size_t w = 0; w < n; ++w) {
        workers.emplace_back([&, w] {
          Rng local(config.seed ^ (0x9E3779B97F4A7C15ULL * (w + 1 + epoch * n)));
          const std::size_t b = order.size() * w / n;
          const std::size_t e = order.size() * (w + 1) / n;
          losses[w] = run_shard<true>(st, order, b, e, local, counts[w]);
        });
      }
      for (auto& t : workers) t.join();
      for (std::size_t w = 0; w < n; ++w) {
        loss += losses[w];
        pairs += counts[w];
      }
    }
    if (report) report->epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }
  return table;
}

// ---- cosine ----------------------------------------------------------------

namespace {

template <typename T>
CosineResult cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw EmbeddingError("cosine: dimension mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return {0.0, false};
  return {std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0), true};
}

}  // namespace

CosineResult cosine(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

CosineResult cosine(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

// ---- file format -----------------------------------------------------------

namespace {

void write_rows(std::ostream& out, const EmbeddingTable& t, bool context) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.tokens()[i];
    const auto row = context ? t.context(i) : t.target(i);
    for (float v : row) out << ' ' << v;
    out << '\n';
  }
}

std::vector<float> parse_row(const std::string& line, int dim, std::size_t line_no,
                             std::string& token) {
  std::istringstream ss(line);
  if (!(ss >> token)) {
    throw EmbeddingError("line " + std::to_string(line_no) + ": empty row");
  }
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(dim));
  std::string field;
  while (ss >> field) {
    char* end = nullptr;
    const float v = std::strtof(field.c_str(), &end);
    if (end != field.c_str() + field.size() || !std::isfinite(v)) {
      throw EmbeddingError("line " + std::to_string(line_no) + ": non-finite value '" +
                           field + "'");
    }
    values.push_back(v);
  }
  if (values.size() != static_cast<std::size_t>(dim)) {
    throw EmbeddingError("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(dim) + " values, got " +
                         std::to_string(values.size()));
  }
  return values;
}

}  // namespace

void save_embeddings(const EmbeddingTable& table, std::ostream& out,
                     bool include_context) {
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  out << table.size() << ' ' << table.dim() << '\n';
  write_rows(out, table, false);
  if (include_context && table.has_context_vectors()) {
    out << "#context\n";
    write_rows(out, table, true);
  }
}

EmbeddingTable load_embeddings(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw EmbeddingError("line 1: missing header");
  std::istringstream hs(line);
  long long count = -1, dim = -1;
  std::string extra;
  if (!(hs >> count >> dim) || (hs >> extra) || count < 0 || dim <= 0) {
    throw EmbeddingError("line 1: header must be \"count dim\"");
  }

  std::vector<std::string> tokens;
  std::vector<std::vector<float>> rows;
  std::vector<std::vector<float>> ctx_rows;
  bool in_context = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "#context") {
      if (in_context || static_cast<long long>(rows.size()) != count) {
        throw EmbeddingError("line " + std::to_string(line_no) + ": row count mismatch");
      }
      in_context = true;
      continue;
    }
    std::string token;
    auto values = parse_row(line, static_cast<int>(dim), line_no, token);
    if (!in_context) {
      if (static_cast<long long>(rows.size()) == count) {
        throw EmbeddingError("line " + std::to_string(line_no) + ": row count mismatch");
      }
      tokens.push_back(token);
      rows.push_back(std::move(values));
    } else {
      const auto i = ctx_rows.size();
      if (i >= tokens.size() || tokens[i] != token) {
        throw EmbeddingError("line " + std::to_string(line_no) +
                             ": context row does not match target vocabulary");
      }
      ctx_rows.push_back(std::move(values));
    }
  }
  if (static_cast<long long>(rows.size()) != count) {
    throw EmbeddingError("line " + std::to_string(line_no) + ": row count mismatch");
  }
  if (in_context && ctx_rows.size() != rows.size()) {
    throw EmbeddingError("line " + std::to_string(line_no) + ": context row count mismatch");
  }

  EmbeddingTable table(std::move(tokens), static_cast<int>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), table.target(i).begin());
  }
  if (in_context) {
    table.allocate_context_vectors();
    for (std::size_t i = 0; i < ctx_rows.size(); ++i) {
      std::copy(ctx_rows[i].begin(), ctx_rows[i].end(), table.context(i).begin());
    }
  }
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return load_embeddings(in);
}

}  // namespace acrank
