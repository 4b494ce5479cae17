#include "acrank/eval_metrics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "acrank/rankers.hpp"
#include "acrank/text.hpp"
#include "json.hpp"

namespace acrank {

using ojson = nlohmann::ordered_json;

std::string format_eval_case_line(const EvalCase& c) {
  ojson doc;
  doc["session_id"] = c.session_id;
  doc["ts"] = c.ts_ms;
  doc["prefix"] = c.prefix;
  doc["candidates"] = c.candidates;
  doc["target"] = c.target;
  doc["weight"] = c.weight;
  ojson ctx = ojson::array();
  for (const auto& p : c.context) ctx.push_back(ojson::array({p.query, p.ts_ms}));
  doc["context"] = std::move(ctx);
  doc["context_present"] = c.context_present;
  return doc.dump();
}

EvalCase parse_eval_case_line(std::string_view line) {
  const auto doc = nlohmann::json::parse(line);
  EvalCase c;
  c.session_id = doc.at("session_id").get<std::string>();
  c.ts_ms = doc.at("ts").get<std::int64_t>();
  c.prefix = doc.at("prefix").get<std::string>();
  c.candidates = doc.at("candidates").get<std::vector<std::string>>();
  c.target = doc.at("target").get<std::string>();
  c.weight = doc.at("weight").get<double>();
  for (const auto& e : doc.at("context")) {
    c.context.push_back({e.at(0).get<std::string>(), e.at(1).get<std::int64_t>()});
  }
  c.context_present = doc.at("context_present").get<bool>();
  if (c.candidates.empty()) throw std::runtime_error("eval case has no candidates");
  if (!(c.weight >= 0.0)) throw std::runtime_error("eval case weight must be >= 0");
  return c;
}

std::vector<EvalCase> read_eval_cases(std::istream& in) {
  std::vector<EvalCase> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_eval_case_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("eval samples line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

std::optional<int> hit_rank(const std::vector<std::string>& ranked_list,
                            std::string_view target) {
  const auto key = canonical_query(target);
  for (std::size_t i = 0; i < ranked_list.size(); ++i) {
    if (canonical_query(ranked_list[i]) == key) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

double discounted_gain(int rank) { return 1.0 / std::log2(rank + 1.0); }

namespace {

double total_weight(std::span<const EvalSample> samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  double w = 0.0;
  for (const auto& s : samples) w += s.weight;
  return w;
}

}  // namespace

double mrr(std::span<const EvalSample> samples, MrrNormalization normalization) {
  const double w = total_weight(samples);
  double sum = 0.0;
  for (const auto& s : samples) {
    if (auto r = hit_rank(s.ranked_list, s.target)) sum += s.weight / *r;
  }
  if (normalization == MrrNormalization::kPerSample) {
    return sum / static_cast<double>(samples.size());
  }
  if (w == 0.0) throw std::domain_error("degenerate weights");
  return sum / w;
}

double ndcg_at_p(std::span<const EvalSample> samples, int p) {
  if (p < 1) throw std::invalid_argument("p must be >= 1");
  const double w = total_weight(samples);
  if (w == 0.0) throw std::domain_error("degenerate weights");
  double sum = 0.0;
  for (const auto& s : samples) {
    if (auto r = hit_rank(s.ranked_list, s.target); r && *r <= p) {
      sum += s.weight * discounted_gain(*r);
    }
  }
  return sum / w;
}

SliceMetrics slice_metrics(std::span<const EvalSample> samples) {
  SliceMetrics m;
  m.count = samples.size();
  for (const auto& s : samples) m.weight_sum += s.weight;
  if (m.count > 0 && m.weight_sum > 0.0) {
    m.mrr = mrr(samples);
    m.ndcg_at_1 = ndcg_at_p(samples, 1);
    m.ndcg_at_3 = ndcg_at_p(samples, 3);
  }
  return m;
}

EvalReport evaluate_samples(std::string ranker_id, std::span<const EvalSample> samples) {
  EvalReport report;
  report.ranker_id = std::move(ranker_id);
  std::vector<EvalSample> with, without;
  for (const auto& s : samples) (s.context_present ? with : without).push_back(s);
  report.all = slice_metrics(samples);
  report.with_past = slice_metrics(with);
  report.without_past = slice_metrics(without);
  return report;
}

EvalReport evaluate(const Ranker& ranker, std::span<const EvalCase> cases) {
  std::vector<EvalSample> samples;
  samples.reserve(cases.size());
  std::size_t errors = 0;
  std::vector<std::string> messages;
  for (const auto& c : cases) {
    try {
      const auto ranked = ranker.rank({c.prefix, c.candidates, c.context, c.ts_ms});
      EvalSample s;
      s.ranked_list.reserve(ranked.size());
      for (const auto& item : ranked) s.ranked_list.push_back(item.query);
      s.target = c.target;
      s.weight = c.weight;
      s.context_present = c.context_present;
      samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      ++errors;
      if (messages.size() < 5) messages.push_back(c.session_id + ": " + e.what());
    }
  }
  auto report = evaluate_samples(ranker.id(), samples);
  report.errors = errors;
  report.error_messages = std::move(messages);
  return report;
}

namespace {

ojson slice_json(const SliceMetrics& m) {
  ojson j;
  j["count"] = m.count;
  j["weight_sum"] = m.weight_sum;
  j["empty"] = m.empty();
  auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
  j["mrr"] = opt(m.mrr);
  j["ndcg@1"] = opt(m.ndcg_at_1);
  j["ndcg@3"] = opt(m.ndcg_at_3);
  return j;
}

const EvalReport* find_report(const std::vector<EvalReport>& reports, const std::string& id) {
  for (const auto& r : reports) {
    if (r.ranker_id == id) return &r;
  }
  return nullptr;
}

std::string cell(const std::optional<double>& v, const std::optional<double>& base,
                 bool is_baseline) {
  if (!v) return "-";
  char buf[64];
  if (is_baseline || !base || *base == 0.0) {
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3f(%+.2f%%)", *v, 100.0 * (*v - *base) / *base);
  }
  return buf;
}

}  // namespace

std::string report_json(const std::vector<EvalReport>& reports, const std::string& baseline_id) {
  ojson doc;
  doc["baseline"] = baseline_id;
  ojson arr = ojson::array();
  for (const auto& r : reports) {
    ojson j;
    j["ranker"] = r.ranker_id;
    j["AS"] = slice_json(r.all);
    j["SWPS"] = slice_json(r.with_past);
    j["SWOPS"] = slice_json(r.without_past);
    j["errors"] = r.errors;
    j["error_messages"] = r.error_messages;
    arr.push_back(std::move(j));
  }
  doc["reports"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::string report_table(const std::vector<EvalReport>& reports, const std::string& baseline_id) {
  const EvalReport* base = find_report(reports, baseline_id);
  std::ostringstream out;
  struct Slice {
    const char* title;
    const SliceMetrics EvalReport::*member;
  };
  const Slice slices[] = {{"All Samples (AS)", &EvalReport::all},
                          {"Samples Without Past Searches (SWOPS)", &EvalReport::without_past},
                          {"Samples With Past Searches (SWPS)", &EvalReport::with_past}};
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.ranker_id.size());
  for (const auto& s : slices) {
    const std::size_t n = reports.empty() ? 0 : (reports.front().*s.member).count;
    out << s.title << "  n=" << n;
    if (n == 0) out << "  (empty slice)";
    out << "\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-*s | %-18s | %-18s | %-18s\n", static_cast<int>(width),
                  "Model", "MRR", "NDCG@1", "NDCG@3");
    out << line;
    for (const auto& r : reports) {
      const auto& m = r.*s.member;
      const SliceMetrics* b = base ? &(base->*s.member) : nullptr;
      const bool is_base = base == &r;
      std::snprintf(line, sizeof(line), "%-*s | %-18s | %-18s | %-18s\n",
                    static_cast<int>(width), r.ranker_id.c_str(),
                    cell(m.mrr, b ? b->mrr : std::nullopt, is_base).c_str(),
                    cell(m.ndcg_at_1, b ? b->ndcg_at_1 : std::nullopt, is_base).c_str(),
                    cell(m.ndcg_at_3, b ? b->ndcg_at_3 : std::nullopt, is_base).c_str());
      out << line;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace acrank
