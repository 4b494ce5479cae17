#include "acrank/feature_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "acrank/text.hpp"
#include "json.hpp"

namespace acrank {

const std::vector<std::string>& FeatureLayout::dense_names() {
  static const std::vector<std::string> names = {
      "candidate_length",         "prefix_length",
      "prefix_ratio",             "log1p_decayed_popularity",
      "log1p_decayed_gmv",        "exact_prefix_match"};
  return names;
}

double decayed_aggregate(const std::vector<double>& daily_values,
                         double half_life_days) {
  if (!(half_life_days > 0.0)) {
    throw std::invalid_argument("half_life_days must be positive");
  }
  double total = 0.0;
  const auto n = daily_values.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double age = static_cast<double>(n - 1 - i);
    total += daily_values[i] * std::exp2(-age / half_life_days);
  }
  return total;
}

namespace {

std::vector<double> fit_series(std::vector<double> v, int h) {
  const auto len = static_cast<std::size_t>(h);
  if (v.size() > len) v.erase(v.begin(), v.end() - static_cast<std::ptrdiff_t>(len));
  if (v.size() < len) v.insert(v.begin(), len - v.size(), 0.0);
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw FeatureError("behavior stats must be finite and nonnegative");
    }
  }
  return v;
}

}  // namespace

StatsStore::StatsStore(int series_length, double half_life_days)
    : series_length_(series_length), half_life_days_(half_life_days) {
  if (series_length <= 0) throw FeatureError("series length must be positive");
  if (!(half_life_days > 0.0)) throw FeatureError("half-life must be positive");
  empty_.daily_counts.assign(static_cast<std::size_t>(series_length), 0.0);
  empty_.daily_gmv.assign(static_cast<std::size_t>(series_length), 0.0);
}

void StatsStore::put(std::string_view query, std::vector<double> daily_counts,
                     std::vector<double> daily_gmv) {
  BehaviorStats s;
  s.daily_counts = fit_series(std::move(daily_counts), series_length_);
  s.daily_gmv = fit_series(std::move(daily_gmv), series_length_);
  s.decayed_popularity = decayed_aggregate(s.daily_counts, half_life_days_);
  s.decayed_gmv = decayed_aggregate(s.daily_gmv, half_life_days_);
  stats_[canonical_query(query)] = std::move(s);
}

const BehaviorStats& StatsStore::get(std::string_view query) const {
  auto it = stats_.find(canonical_query(query));
  return it == stats_.end() ? empty_ : it->second;
}

bool StatsStore::contains(std::string_view query) const {
  return stats_.count(canonical_query(query)) > 0;
}

StatsStore read_stats(std::istream& in, int series_length, double half_life_days) {
  StatsStore store(series_length, half_life_days);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      store.put(doc.at("query").get<std::string>(),
                doc.at("daily_counts").get<std::vector<double>>(),
                doc.at("daily_gmv").get<std::vector<double>>());
    } catch (const std::exception& e) {
      throw FeatureError("stats line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

StatsStore read_stats_file(const std::string& path, int series_length,
                           double half_life_days) {
  std::ifstream in(path);
  if (!in) throw FeatureError("cannot open stats file " + path);
  return read_stats(in, series_length, half_life_days);
}

void write_stats(const StatsStore& store, std::ostream& out) {
  for (const auto& [query, s] : store.entries()) {
    nlohmann::ordered_json doc;
    doc["query"] = query;
    doc["daily_counts"] = s.daily_counts;
    doc["daily_gmv"] = s.daily_gmv;
    out << doc.dump() << '\n';
  }
}

StatsStore build_stats(const std::vector<ACSession>& sessions, int series_length,
                       double half_life_days) {
  constexpr std::int64_t kDayMs = 24LL * 60 * 60 * 1000;
  auto day_of = [](std::int64_t ts) {
    return ts >= 0 ? ts / kDayMs : (ts - kDayMs + 1) / kDayMs;
  };
  std::optional<std::int64_t> last_day;
  for (const auto& s : sessions) {
    auto d = day_of(s.ts_ms);
    for (const auto& p : s.past_queries) d = std::max(d, day_of(p.ts_ms));
    last_day = last_day ? std::max(*last_day, d) : d;
  }
  StatsStore store(series_length, half_life_days);
  if (!last_day) return store;

  const auto h = static_cast<std::size_t>(series_length);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> acc;
  // A past query repeated across sessions of one user is one search event.
  std::map<std::string, std::set<std::pair<std::int64_t, std::string>>> seen;
  auto add = [&](const std::string& raw, std::int64_t ts, double gmv) {
    const auto age = *last_day - day_of(ts);
    if (age < 0 || age >= static_cast<std::int64_t>(h)) return;
    auto key = canonical_query(raw);
    if (key.empty()) return;
    auto& [counts, gmvs] = acc[key];
    if (counts.empty()) {
      counts.assign(h, 0.0);
      gmvs.assign(h, 0.0);
    }
    const auto slot = h - 1 - static_cast<std::size_t>(age);
    counts[slot] += 1.0;
    gmvs[slot] += gmv;
  };
  for (const auto& s : sessions) {
    auto& user_seen = seen[s.user_id];
    for (const auto& p : s.past_queries) {
      if (user_seen.emplace(p.ts_ms, p.query).second) add(p.query, p.ts_ms, 0.0);
    }
    if (user_seen.emplace(s.ts_ms, s.submitted_query).second) {
      add(s.submitted_query, s.ts_ms, s.gmv);
    }
  }
  for (auto& [q, v] : acc) store.put(q, std::move(v.first), std::move(v.second));
  return store;
}

ContextState ContextState::from_history(const std::vector<PastQuery>& past,
                                        std::int64_t now_ms, int k,
                                        std::int64_t ttl_ms) {
  ContextState ctx;
  for (const auto& p : past) {
    if (p.ts_ms <= now_ms && now_ms - p.ts_ms <= ttl_ms) ctx.recent.push_back(p);
  }
  std::stable_sort(ctx.recent.begin(), ctx.recent.end(),
                   [](const PastQuery& a, const PastQuery& b) { return a.ts_ms > b.ts_ms; });
  if (ctx.recent.size() > static_cast<std::size_t>(k)) {
    ctx.recent.resize(static_cast<std::size_t>(k));
  }
  return ctx;
}

FeatureVector featurize(std::string_view candidate, std::string_view prefix,
                        const BehaviorStats& stats, const ContextState& ctx,
                        const EmbeddingTable& embeddings,
                        const FeatureLayout& layout) {
  if (embeddings.size() > 0 && embeddings.dim() != layout.embedding_dim) {
    throw FeatureError("embedding dimension " + std::to_string(embeddings.dim()) +
                       " does not match layout dimension " +
                       std::to_string(layout.embedding_dim));
  }
  const auto cand = canonical_query(candidate);
  if (cand.empty()) throw FeatureError("empty candidate");
  const auto pre = canonical_prefix(prefix);
  const double cand_len = static_cast<double>(utf8_length(cand));
  const double pre_len = static_cast<double>(utf8_length(pre));

  FeatureVector fv;
  fv.dense = {
      cand_len,
      pre_len,
      std::min(1.0, (pre_len + 1.0) / (cand_len + 1.0)),
      std::log1p(stats.decayed_popularity),
      std::log1p(stats.decayed_gmv),
      starts_with(cand, pre) ? 1.0 : 0.0,
  };

  const auto h = static_cast<std::size_t>(layout.series_length);
  fv.series.assign(h, 0.0);
  const auto& counts = stats.daily_counts;
  for (std::size_t i = 0; i < std::min(h, counts.size()); ++i) {
    fv.series[h - 1 - i] = std::log1p(counts[counts.size() - 1 - i]);
  }

  const auto k = static_cast<std::size_t>(layout.context_length);
  fv.context.assign(k + 3, 0.0);
  if (ctx.present()) {
    const auto cand_vec = embeddings.lookup(candidate);
    double max_cos = -1.0, sum_cos = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(k, ctx.recent.size()); ++i) {
      double c = 0.0;
      if (cand_vec) {
        if (auto past_vec = embeddings.lookup(ctx.recent[i].query)) {
          c = cosine(*cand_vec, *past_vec).value;
        }
      }
      fv.context[i] = c;
      max_cos = std::max(max_cos, c);
      sum_cos += c;
      ++n;
    }
    fv.context[k] = max_cos;
    fv.context[k + 1] = sum_cos / static_cast<double>(n);
    fv.context[k + 2] = 1.0;
  }
  return fv;
}

}  // namespace acrank
