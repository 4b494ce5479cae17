#include "acrank/session_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <unordered_set>

#include "acrank/text.hpp"
#include "json.hpp"

namespace acrank {

using ojson = nlohmann::ordered_json;

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "gmv") return WeightMode::kGmv;
  if (name == "unit") return WeightMode::kUnit;
  if (name == "log1p_gmv") return WeightMode::kLog1pGmv;
  throw std::invalid_argument("unknown weight mode: " + std::string(name));
}

std::string_view to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::kGmv:
      return "gmv";
    case WeightMode::kUnit:
      return "unit";
    case WeightMode::kLog1pGmv:
      return "log1p_gmv";
  }
  return "unknown";
}

double pair_weight(double gmv, WeightMode mode) {
  switch (mode) {
    case WeightMode::kGmv:
      return gmv;
    case WeightMode::kUnit:
      return 1.0;
    case WeightMode::kLog1pGmv:
      return 1.0 + std::log1p(gmv);
  }
  return 1.0;
}

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw std::runtime_error(std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) {
    throw std::runtime_error(std::string("field \"") + key +
                             "\" must be a string");
  }
  return v.get<std::string>();
}

std::int64_t as_int64(const nlohmann::json& v, const char* what) {
  if (!v.is_number_integer()) {
    throw std::runtime_error(std::string(what) + " must be an integer");
  }
  return v.get<std::int64_t>();
}

std::vector<PastQuery> parse_past(const nlohmann::json& arr) {
  if (!arr.is_array()) throw std::runtime_error("past_queries must be an array");
  std::vector<PastQuery> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string()) {
      throw std::runtime_error("past_queries entries must be [query, ts]");
    }
    out.push_back({e[0].get<std::string>(), as_int64(e[1], "past query ts")});
  }
  return out;
}

ojson past_to_json(const std::vector<PastQuery>& past) {
  ojson arr = ojson::array();
  for (const auto& p : past) arr.push_back(ojson::array({p.query, p.ts_ms}));
  return arr;
}

}  // namespace

ACSession parse_session_line(std::string_view line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("record must be an object");

  ACSession s;
  s.session_id = require_string(doc, "session_id");
  s.user_id = require_string(doc, "user_id");
  s.ts_ms = as_int64(require(doc, "ts"), "ts");
  s.past_queries = parse_past(require(doc, "past_queries"));
  s.submitted_query = require_string(doc, "submitted");

  const auto& gmv = require(doc, "gmv");
  if (!gmv.is_number()) throw std::runtime_error("gmv must be a number");
  s.gmv = gmv.get<double>();
  if (!std::isfinite(s.gmv)) throw std::runtime_error("non-finite gmv");
  if (s.gmv < 0) throw std::runtime_error("negative gmv");

  const auto& imps = require(doc, "impressions");
  if (!imps.is_array()) throw std::runtime_error("impressions must be an array");
  for (const auto& imp : imps) {
    if (!imp.is_object()) throw std::runtime_error("impression must be an object");
    Impression out;
    out.prefix = require_string(imp, "prefix");
    const auto& cands = require(imp, "candidates");
    if (!cands.is_array()) throw std::runtime_error("candidates must be an array");
    std::unordered_set<std::string> seen;
    for (const auto& c : cands) {
      if (!c.is_string()) throw std::runtime_error("candidate must be a string");
      if (out.candidates.size() == kMaxDisplayDepth) break;
      auto text = c.get<std::string>();
      if (seen.insert(canonical_query(text)).second) {
        out.candidates.push_back(std::move(text));
      }
    }
    if (!out.candidates.empty()) s.impressions.push_back(std::move(out));
  }
  return s;
}

std::string format_session_line(const ACSession& s) {
  ojson doc;
  doc["session_id"] = s.session_id;
  doc["user_id"] = s.user_id;
  doc["ts"] = s.ts_ms;
  doc["past_queries"] = past_to_json(s.past_queries);
  ojson imps = ojson::array();
  for (const auto& imp : s.impressions) {
    ojson o;
    o["prefix"] = imp.prefix;
    o["candidates"] = imp.candidates;
    imps.push_back(std::move(o));
  }
  doc["impressions"] = std::move(imps);
  doc["submitted"] = s.submitted_query;
  doc["gmv"] = s.gmv;
  return doc.dump();
}

SessionLog parse_session_log(std::istream& in, ParseMode mode) {
  SessionLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      log.sessions.push_back(parse_session_line(line));
    } catch (const std::exception& e) {
      if (mode == ParseMode::kStrict) throw SessionParseError(line_no, e.what());
      log.errors.push_back({line_no, e.what()});
    }
  }
  return log;
}

std::vector<LabeledImpression> label_impressions(const ACSession& session) {
  const std::string target = canonical_query(session.submitted_query);
  std::vector<LabeledImpression> out;
  out.reserve(session.impressions.size());
  for (const auto& imp : session.impressions) {
    LabeledImpression li;
    li.impression = imp;
    for (std::size_t i = 0; i < imp.candidates.size(); ++i) {
      const int rank = static_cast<int>(i) + 1;
      if (!li.positive_rank && canonical_query(imp.candidates[i]) == target) {
        li.positive_rank = rank;
      } else {
        li.negatives.push_back({imp.candidates[i], rank});
      }
    }
    out.push_back(std::move(li));
  }
  return out;
}

std::vector<TrainingPair> extract_pairs(const ACSession& session,
                                        WeightMode weight_mode) {
  std::vector<TrainingPair> pairs;
  const double w = pair_weight(session.gmv, weight_mode);
  for (const auto& li : label_impressions(session)) {
    if (!li.positive_rank) continue;
    const int rp = *li.positive_rank;
    const auto& positive = li.impression.candidates[static_cast<std::size_t>(rp - 1)];
    for (const auto& neg : li.negatives) {
      TrainingPair p;
      p.session_id = session.session_id;
      p.prefix = li.impression.prefix;
      p.positive_query = positive;
      p.negative_query = neg.query;
      p.rank_p = rp;
      p.rank_n = neg.rank;
      p.weight = w;
      p.ts_ms = session.ts_ms;
      p.context = session.past_queries;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

std::vector<std::string> choose_held_out_sessions(
    std::vector<std::string> session_ids, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must be in [0, 1]");
  }
  std::sort(session_ids.begin(), session_ids.end());
  session_ids.erase(std::unique(session_ids.begin(), session_ids.end()),
                    session_ids.end());
  const auto n = session_ids.size();
  const auto take = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 0.5));
  std::stable_sort(session_ids.begin(), session_ids.end(),
                   [seed](const std::string& a, const std::string& b) {
                     return fnv1a64(a, seed) < fnv1a64(b, seed);
                   });
  session_ids.resize(std::min(take, n));
  std::sort(session_ids.begin(), session_ids.end());
  return session_ids;
}

CorpusSplit split_corpus(const std::vector<TrainingPair>& pairs,
                         double validation_fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs) ids.push_back(p.session_id);
  const auto held = choose_held_out_sessions(std::move(ids), validation_fraction, seed);
  const std::set<std::string> held_set(held.begin(), held.end());

  CorpusSplit split;
  for (const auto& p : pairs) {
    (held_set.count(p.session_id) ? split.validation : split.train).push_back(p);
  }
  return split;
}

std::string format_pair_line(const TrainingPair& p) {
  ojson doc;
  doc["session_id"] = p.session_id;
  doc["prefix"] = p.prefix;
  doc["positive"] = p.positive_query;
  doc["negative"] = p.negative_query;
  doc["rank_p"] = p.rank_p;
  doc["rank_n"] = p.rank_n;
  doc["weight"] = p.weight;
  doc["ts"] = p.ts_ms;
  doc["context"] = past_to_json(p.context);
  return doc.dump();
}

TrainingPair parse_pair_line(std::string_view line) {
  const auto doc = nlohmann::json::parse(line);
  TrainingPair p;
  p.session_id = require_string(doc, "session_id");
  p.prefix = require_string(doc, "prefix");
  p.positive_query = require_string(doc, "positive");
  p.negative_query = require_string(doc, "negative");
  p.rank_p = static_cast<int>(as_int64(require(doc, "rank_p"), "rank_p"));
  p.rank_n = static_cast<int>(as_int64(require(doc, "rank_n"), "rank_n"));
  p.weight = require(doc, "weight").get<double>();
  p.ts_ms = as_int64(require(doc, "ts"), "ts");
  p.context = parse_past(require(doc, "context"));
  if (p.rank_p < 1 || p.rank_n < 1 || p.rank_p == p.rank_n) {
    throw std::runtime_error("pair ranks must be distinct and >= 1");
  }
  if (!(p.weight >= 0.0)) throw std::runtime_error("pair weight must be >= 0");
  return p;
}

std::vector<TrainingPair> read_pairs(std::istream& in) {
  std::vector<TrainingPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_pair_line(line));
    } catch (const std::exception& e) {
      throw SessionParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace acrank
