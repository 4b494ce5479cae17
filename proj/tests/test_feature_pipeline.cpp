#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "acrank/feature_pipeline.hpp"

using namespace acrank;

namespace {

constexpr std::int64_t kMin = 60 * 1000;

// Three-word table: two closet items pointing the same way, one kitchen item
// orthogonal to them.
EmbeddingTable tiny_table() {
  EmbeddingTable t({"hangers", "closet_organizer", "hand_soap"}, 2);
  auto set = [&](std::size_t i, float a, float b) {
    t.target(i)[0] = a;
    t.target(i)[1] = b;
  };
  set(0, 1.0f, 0.0f);
  set(1, 2.0f, 0.0f);
  set(2, 0.0f, 3.0f);
  return t;
}

FeatureLayout tiny_layout() {
  FeatureLayout l;
  l.embedding_dim = 2;
  return l;
}

}  // namespace

TEST(DecayedAggregate, Examples) {
  EXPECT_DOUBLE_EQ(decayed_aggregate({10}, 7.0), 10.0);
  EXPECT_DOUBLE_EQ(decayed_aggregate({0, 8}, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(decayed_aggregate({4, 8}, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(decayed_aggregate({}, 7.0), 0.0);
  EXPECT_THROW(decayed_aggregate({1}, 0.0), std::invalid_argument);
}

TEST(DecayedAggregate, LinearAndMonotoneProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + uniform_index(rng, 10);
    std::vector<double> a(n), b(n), sum(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 10 * uniform01(rng);
      b[i] = 10 * uniform01(rng);
      sum[i] = a[i] + b[i];
    }
    const double hl = 0.5 + 10 * uniform01(rng);
    EXPECT_NEAR(decayed_aggregate(sum, hl), decayed_aggregate(a, hl) + decayed_aggregate(b, hl), 1e-9);
    // Any increment raises the total, and a recent one counts at least as
    // much as an older one.
    auto older = a, newer = a;
    const auto i = uniform_index(rng, n);
    older[i] += 1.0;
    newer[n - 1] += 1.0;
    EXPECT_GT(decayed_aggregate(older, hl), decayed_aggregate(a, hl));
    EXPECT_GE(decayed_aggregate(newer, hl), decayed_aggregate(older, hl) - 1e-12);
  }
}

TEST(StatsStore, LeftPadsShortSeries) {
  StatsStore store(7, 7.0);
  store.put("Hangers", {1, 3}, {0, 100});
  const auto& s = store.get("hangers");
  EXPECT_EQ(s.daily_counts, (std::vector<double>{0, 0, 0, 0, 0, 1, 3}));
  EXPECT_DOUBLE_EQ(s.decayed_popularity, 3.0 + std::exp2(-1.0 / 7.0));
  EXPECT_DOUBLE_EQ(s.decayed_gmv, 100.0);
  EXPECT_TRUE(store.contains("  HANGERS "));
}

TEST(StatsStore, KeepsMostRecentDays) {
  StatsStore store(3, 7.0);
  store.put("x", {9, 9, 1, 2, 3}, {0, 0, 0, 0, 0});
  EXPECT_EQ(store.get("x").daily_counts, (std::vector<double>{1, 2, 3}));
}

TEST(StatsStore, MissingQueryReadsAsZeros) {
  StatsStore store(7, 7.0);
  const auto& s = store.get("nothing");
  EXPECT_EQ(s.daily_counts, std::vector<double>(7, 0.0));
  EXPECT_EQ(s.decayed_popularity, 0.0);
}

TEST(StatsStore, RejectsNegativeCounts) {
  StatsStore store(7, 7.0);
  EXPECT_THROW(store.put("x", {-1}, {0}), FeatureError);
}

TEST(StatsStore, FileRoundTrip) {
  StatsStore store(7, 7.0);
  store.put("hangers", {1, 2, 3}, {0, 10, 0.5});
  store.put("hat", {0, 0, 0, 0, 0, 0, 4}, {0, 0, 0, 0, 0, 0, 0});
  std::stringstream buf;
  write_stats(store, buf);
  const auto back = read_stats(buf, 7, 7.0);
  ASSERT_EQ(back.entries().size(), 2u);
  EXPECT_EQ(back.get("hangers").daily_gmv, store.get("hangers").daily_gmv);
  EXPECT_EQ(back.get("hat").decayed_popularity, 4.0);
}

TEST(StatsStore, BadLineNamesLine) {
  std::istringstream in("{\"query\":\"a\",\"daily_counts\":[1],\"daily_gmv\":[1]}\n{\"query\":1}\n");
  try {
    read_stats(in);
    FAIL();
  } catch (const FeatureError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(BuildStats, CountsSearchesPerDay) {
  constexpr std::int64_t kDay = 24LL * 3600 * 1000;
  ACSession a;
  a.session_id = "a";
  a.user_id = "u";
  a.ts_ms = 10 * kDay + 5;
  a.submitted_query = "Hangers";
  a.gmv = 20;
  a.past_queries = {{"hat", 9 * kDay}};
  ACSession b = a;
  b.session_id = "b";
  b.ts_ms = 10 * kDay + 50;
  b.gmv = 5;
  // Same user, same past search: a single event.
  const auto store = build_stats({a, b}, 3, 7.0);
  EXPECT_EQ(store.get("hangers").daily_counts, (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(store.get("hangers").daily_gmv, (std::vector<double>{0, 0, 25}));
  EXPECT_EQ(store.get("hat").daily_counts, (std::vector<double>{0, 1, 0}));
  EXPECT_TRUE(build_stats({}, 3, 7.0).entries().empty());
}

TEST(ContextState, TtlAndDepth) {
  const std::int64_t now = 1000 * kMin;
  std::vector<PastQuery> past = {{"a", now - 40 * kMin}, {"b", now - 20 * kMin},
                                 {"c", now - 10 * kMin}, {"d", now - 1 * kMin},
                                 {"e", now - 5 * kMin},  {"future", now + kMin},
                                 {"edge", now - 30 * kMin}};
  const auto ctx = ContextState::from_history(past, now, 3, 30 * kMin);
  ASSERT_EQ(ctx.recent.size(), 3u);
  EXPECT_EQ(ctx.recent[0].query, "d");
  EXPECT_EQ(ctx.recent[1].query, "e");
  EXPECT_EQ(ctx.recent[2].query, "c");

  const auto all = ContextState::from_history(past, now, 10, 30 * kMin);
  EXPECT_EQ(all.recent.size(), 5u);
  EXPECT_EQ(all.recent.back().query, "edge");
  EXPECT_FALSE(ContextState::from_history(past, now - 100 * kMin, 3, 30 * kMin).present());
}

TEST(Featurize, DenseBlock) {
  StatsStore store(7, 7.0);
  store.put("hangers", {1, 3}, {0, 100});
  const auto fv = featurize("hangers", "han", store.get("hangers"), {}, tiny_table(), tiny_layout());
  ASSERT_EQ(fv.dense.size(), 6u);
  EXPECT_EQ(fv.dense[0], 7.0);
  EXPECT_EQ(fv.dense[1], 3.0);
  EXPECT_DOUBLE_EQ(fv.dense[2], 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(fv.dense[kDensePopularity], std::log1p(3.0 + std::exp2(-1.0 / 7.0)));
  EXPECT_DOUBLE_EQ(fv.dense[4], std::log1p(100.0));
  EXPECT_EQ(fv.dense[5], 1.0);

  // Prefix that does not match: flag off, ratio still capped at 1.
  const auto off = featurize("hat", "hangers", {}, {}, tiny_table(), tiny_layout());
  EXPECT_EQ(off.dense[5], 0.0);
  EXPECT_EQ(off.dense[2], 1.0);
}

TEST(Featurize, SeriesIsLog1pOldestFirst) {
  StatsStore store(7, 7.0);
  store.put("hangers", {0, 0, 0, 0, 0, 1, 3}, {0, 0, 0, 0, 0, 0, 0});
  const auto fv = featurize("hangers", "h", store.get("hangers"), {}, tiny_table(), tiny_layout());
  const std::vector<double> expected = {0, 0, 0, 0, 0, std::log(2.0), std::log(4.0)};
  ASSERT_EQ(fv.series.size(), 7u);
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(fv.series[i], expected[i], 1e-15);
}

TEST(Featurize, EmptyContextIsAllZero) {
  const auto fv = featurize("hangers", "h", {}, {}, tiny_table(), tiny_layout());
  EXPECT_EQ(fv.context, std::vector<double>(6, 0.0));
}

TEST(Featurize, IdenticalPastQueryGivesCosineOne) {
  ContextState ctx;
  ctx.recent = {{"Hangers", 0}};
  const auto fv = featurize("hangers", "h", {}, ctx, tiny_table(), tiny_layout());
  EXPECT_NEAR(fv.context[0], 1.0, 1e-7);
  EXPECT_EQ(fv.context[1], 0.0);
  EXPECT_EQ(fv.context[2], 0.0);
  EXPECT_NEAR(fv.context[3], 1.0, 1e-7);  // max
  EXPECT_NEAR(fv.context[4], 1.0, 1e-7);  // mean over available slots
  EXPECT_EQ(fv.context[5], 1.0);
}

TEST(Featurize, MixedContext) {
  ContextState ctx;
  ctx.recent = {{"hand soap", 2}, {"closet organizer", 1}, {"never seen", 0}};
  const auto fv = featurize("hangers", "h", {}, ctx, tiny_table(), tiny_layout());
  EXPECT_NEAR(fv.context[0], 0.0, 1e-7);
  EXPECT_NEAR(fv.context[1], 1.0, 1e-7);
  EXPECT_EQ(fv.context[2], 0.0);  // OOV past query
  EXPECT_NEAR(fv.context[3], 1.0, 1e-7);
  EXPECT_NEAR(fv.context[4], 1.0 / 3.0, 1e-7);
  EXPECT_EQ(fv.context[5], 1.0);

  // OOV candidate keeps the presence flag but has no similarity.
  const auto oov = featurize("umbrella", "u", {}, ctx, tiny_table(), tiny_layout());
  EXPECT_EQ(oov.context, (std::vector<double>{0, 0, 0, 0, 0, 1}));
}

TEST(Featurize, LengthsFollowLayout) {
  FeatureLayout l = tiny_layout();
  l.series_length = 4;
  l.context_length = 5;
  EXPECT_EQ(l.total_length(), 6 + 4 + 8);
  const auto fv = featurize("hat", "h", {}, {}, tiny_table(), l);
  EXPECT_EQ(fv.dense.size() + fv.series.size() + fv.context.size(),
            static_cast<std::size_t>(l.total_length()));
}

TEST(Featurize, RejectsDimensionMismatchAndEmptyCandidate) {
  FeatureLayout l = tiny_layout();
  l.embedding_dim = 50;
  EXPECT_THROW(featurize("hat", "h", {}, {}, tiny_table(), l), FeatureError);
  EXPECT_THROW(featurize("   ", "h", {}, {}, tiny_table(), tiny_layout()), FeatureError);
}

TEST(Featurize, DeterministicProperty) {
  ContextState ctx;
  ctx.recent = {{"hand soap", 2}, {"closet organizer", 1}};
  const auto a = featurize("hangers", "ha", {}, ctx, tiny_table(), tiny_layout());
  const auto b = featurize("hangers", "ha", {}, ctx, tiny_table(), tiny_layout());
  EXPECT_EQ(a, b);
}
