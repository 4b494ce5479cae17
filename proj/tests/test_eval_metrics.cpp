#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "acrank/eval_metrics.hpp"
#include "acrank/rankers.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace acrank;
namespace to = testing_oracle;

namespace {

EvalSample sample(std::vector<std::string> list, std::string target, double w = 1.0,
                  bool ctx = false) {
  return {std::move(list), std::move(target), w, ctx};
}

// Keeps the candidates in the order given; fails on the prefix "boom".
class FixedRanker : public Ranker {
 public:
  std::string id() const override { return "fixed"; }
  RankedList rank(const RankRequest& r) const override {
    if (r.prefix == "boom") throw std::runtime_error("ranker failed");
    RankedList out;
    for (const auto& c : r.candidates) out.push_back({c, 0.0});
    return out;
  }
};

}  // namespace

TEST(HitRank, Examples) {
  EXPECT_EQ(hit_rank({"a", "b", "c"}, "b"), 2);
  EXPECT_EQ(hit_rank({"a", "b", "c"}, "a"), 1);
  EXPECT_FALSE(hit_rank({"a", "b", "c"}, "z").has_value());
  EXPECT_EQ(hit_rank({"Hand  Soap"}, " hand soap"), 1);
  EXPECT_FALSE(hit_rank({}, "a").has_value());
}

TEST(Mrr, Examples) {
  const std::vector<EvalSample> one = {sample({"a", "b"}, "a")};
  EXPECT_EQ(mrr(one), 1.0);
  const std::vector<EvalSample> two = {sample({"a", "b"}, "a"), sample({"a", "b"}, "b")};
  EXPECT_DOUBLE_EQ(mrr(two), 0.75);
  const std::vector<EvalSample> absent = {sample({"a"}, "x"), sample({"b"}, "y", 3.0)};
  EXPECT_EQ(mrr(absent), 0.0);
}

TEST(Mrr, NormalizationModes) {
  const std::vector<EvalSample> s = {sample({"a", "b"}, "a", 4.0), sample({"a", "b"}, "b", 2.0)};
  EXPECT_DOUBLE_EQ(mrr(s), (4.0 + 1.0) / 6.0);
  EXPECT_DOUBLE_EQ(mrr(s, MrrNormalization::kPerSample), (4.0 + 1.0) / 2.0);
}

TEST(Mrr, DegenerateInputs) {
  const std::vector<EvalSample> zero = {sample({"a"}, "a", 0.0)};
  EXPECT_THROW(mrr(zero), std::domain_error);
  EXPECT_THROW(ndcg_at_p(zero, 1), std::domain_error);
  EXPECT_THROW(mrr(std::vector<EvalSample>{}), std::invalid_argument);
  const std::vector<EvalSample> one = {sample({"a"}, "a")};
  EXPECT_THROW(ndcg_at_p(one, 0), std::invalid_argument);
}

TEST(Ndcg, Examples) {
  EXPECT_EQ(ndcg_at_p(std::vector<EvalSample>{sample({"a", "b"}, "a")}, 1), 1.0);
  EXPECT_NEAR(ndcg_at_p(std::vector<EvalSample>{sample({"a", "b", "c"}, "b")}, 3), 0.63093, 1e-5);
  EXPECT_EQ(ndcg_at_p(std::vector<EvalSample>{sample({"a", "b", "c", "d"}, "d")}, 3), 0.0);
  EXPECT_NEAR(discounted_gain(2), 1.0 / std::log2(3.0), 1e-15);
}

TEST(Metrics, MatchNaiveOracle) {
  Rng rng(123);
  const auto samples = to::random_samples(1000, rng);
  const auto naive = to::naive_metrics(samples);
  EXPECT_NEAR(mrr(samples), naive.mrr, 1e-12);
  EXPECT_NEAR(ndcg_at_p(samples, 1), naive.ndcg1, 1e-12);
  EXPECT_NEAR(ndcg_at_p(samples, 3), naive.ndcg3, 1e-12);
}

TEST(Metrics, BoundsAndMonotoneInP) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = to::random_samples(40, rng);
    const double m = mrr(s);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
    double prev = 0.0;
    for (int p = 1; p <= 11; ++p) {
      const double n = ndcg_at_p(s, p);
      EXPECT_GE(n, prev);
      EXPECT_LE(n, 1.0);
      prev = n;
    }
  }
}

TEST(Metrics, WeightScalingInvariance) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = to::random_samples(30, rng);
    const double m = mrr(s), n = ndcg_at_p(s, 3);
    const double c = 0.01 + 100 * uniform01(rng);
    for (auto& x : s) x.weight *= c;
    EXPECT_NEAR(mrr(s), m, 1e-12);
    EXPECT_NEAR(ndcg_at_p(s, 3), n, 1e-12);
  }
}

TEST(Metrics, MovingTargetUpNeverHurts) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = to::random_samples(10, rng);
    const double m = mrr(s), n1 = ndcg_at_p(s, 1), n3 = ndcg_at_p(s, 3);
    auto& victim = s[uniform_index(rng, s.size())];
    const auto r = hit_rank(victim.ranked_list, victim.target);
    if (!r || *r == 1) continue;
    std::swap(victim.ranked_list[*r - 1], victim.ranked_list[*r - 2]);
    EXPECT_GE(mrr(s), m);
    EXPECT_GE(ndcg_at_p(s, 1), n1);
    EXPECT_GE(ndcg_at_p(s, 3), n3);
  }
}

TEST(Slices, PartitionIsExact) {
  Rng rng(10);
  auto s = to::random_samples(200, rng);
  s[0].weight = 1.0;
  const auto rep = evaluate_samples("x", s);
  EXPECT_EQ(rep.with_past.count + rep.without_past.count, rep.all.count);
  EXPECT_NEAR(rep.with_past.weight_sum + rep.without_past.weight_sum, rep.all.weight_sum, 1e-9);
}

TEST(Slices, ContextFreeSamples) {
  const std::vector<EvalSample> s = {sample({"a", "b"}, "a"), sample({"a", "b"}, "b", 3.0)};
  const auto rep = evaluate_samples("x", s);
  EXPECT_TRUE(rep.with_past.empty());
  EXPECT_FALSE(rep.with_past.mrr.has_value());
  EXPECT_EQ(rep.without_past.mrr, rep.all.mrr);
  EXPECT_EQ(rep.without_past.ndcg_at_3, rep.all.ndcg_at_3);
}

TEST(Slices, ZeroWeightSliceHasNoMetrics) {
  const std::vector<EvalSample> s = {sample({"a"}, "a", 0.0, true), sample({"a"}, "a", 1.0)};
  const auto rep = evaluate_samples("x", s);
  EXPECT_EQ(rep.with_past.count, 1u);
  EXPECT_FALSE(rep.with_past.mrr.has_value());
  EXPECT_EQ(rep.all.mrr, 1.0);
}

TEST(Evaluate, PerfectRankerScoresOne) {
  Rng rng(11);
  auto s = to::random_samples(100, rng);
  for (auto& x : s) {
    x.ranked_list.insert(x.ranked_list.begin(), x.target);
    x.weight += 0.1;
  }
  const auto rep = evaluate_samples("perfect", s);
  EXPECT_DOUBLE_EQ(*rep.all.mrr, 1.0);
  EXPECT_DOUBLE_EQ(*rep.all.ndcg_at_1, 1.0);
  EXPECT_DOUBLE_EQ(*rep.with_past.ndcg_at_3, 1.0);
}

TEST(Evaluate, TalliesRankerErrors) {
  std::vector<EvalCase> cases(3);
  cases[0].prefix = "h";
  cases[0].candidates = {"hat", "hangers"};
  cases[0].target = "hangers";
  cases[1] = cases[0];
  cases[1].prefix = "boom";
  cases[2] = cases[0];
  cases[2].target = "hat";
  cases[2].context_present = true;
  cases[2].context = {{"closet", 1}};
  const auto rep = evaluate(FixedRanker{}, cases);
  EXPECT_EQ(rep.ranker_id, "fixed");
  EXPECT_EQ(rep.errors, 1u);
  ASSERT_EQ(rep.error_messages.size(), 1u);
  EXPECT_EQ(rep.all.count, 2u);
  EXPECT_DOUBLE_EQ(*rep.all.mrr, 0.75);
  EXPECT_EQ(rep.with_past.count, 1u);
}

TEST(EvalCaseLine, RoundTrip) {
  EvalCase c;
  c.session_id = "s1";
  c.ts_ms = 42;
  c.prefix = "ha";
  c.candidates = {"hat", "hangers"};
  c.target = "hangers";
  c.weight = 12.5;
  c.context = {{"closet organizer", 40}};
  c.context_present = true;
  EXPECT_EQ(parse_eval_case_line(format_eval_case_line(c)), c);
  std::istringstream in(format_eval_case_line(c) + "\n\n" + format_eval_case_line(c) + "\n");
  EXPECT_EQ(read_eval_cases(in).size(), 2u);
}

TEST(Report, JsonAndTable) {
  const std::vector<EvalSample> s = {sample({"a", "b"}, "a", 1.0, true), sample({"a", "b"}, "b")};
  const std::vector<EvalSample> t = {sample({"b", "a"}, "a", 1.0, true), sample({"b", "a"}, "b")};
  const std::vector<EvalReport> reps = {evaluate_samples("mpc", s), evaluate_samples("deeppltr", t)};
  const auto doc = nlohmann::json::parse(report_json(reps, "mpc"));
  EXPECT_EQ(doc["baseline"], "mpc");
  ASSERT_EQ(doc["reports"].size(), 2u);
  EXPECT_DOUBLE_EQ(doc["reports"][0]["AS"]["mrr"].get<double>(), 0.75);
  EXPECT_EQ(doc["reports"][1]["SWPS"]["count"], 1);
  EXPECT_DOUBLE_EQ(doc["reports"][1]["SWPS"]["mrr"].get<double>(), 0.5);

  const auto table = report_table(reps, "mpc");
  EXPECT_NE(table.find("All Samples (AS)  n=2"), std::string::npos) << table;
  EXPECT_NE(table.find("Samples With Past Searches (SWPS)"), std::string::npos);
  EXPECT_NE(table.find("0.750"), std::string::npos);
  // SWPS: deeppltr 0.5 vs mpc 1.0 is -50%.
  EXPECT_NE(table.find("0.500(-50.00%)"), std::string::npos) << table;
}
