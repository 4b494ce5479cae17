// Acceptance run: one PASS/FAIL line per criterion. Exits 1 if a criterion
// fails that the manifest does not list under known_failures.
// Thresholds and data settings come from fixtures/acceptance_manifest.json.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "acrank/io.hpp"
#include "acrank/pipeline.hpp"
#include "acrank/synthetic.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace acrank;
namespace to = testing_oracle;
using nlohmann::json;

namespace {

json manifest;
std::vector<int> failed;
std::set<int> selected;  // empty: all criteria

bool wanted(int id) { return selected.empty() || selected.count(id) > 0; }

double limit(const char* key) { return manifest["thresholds"][key].get<double>(); }
double seconds_limit(const char* key) { return manifest["time_limits_s"][key].get<double>(); }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%d %-22s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) failed.push_back(id);
}

// A criterion that throws is a failure, not a crash of the whole run.
void run(int id, const char* name, const std::function<void()>& body) {
  if (!wanted(id)) return;
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1 -----------------------------------------------------------------------

void gradient() {
  Stopwatch sw;
  const auto cfg = to::small_config(21);
  Rng rng(21);
  const auto params = ModelParams::initialize(cfg, rng);
  const auto min_pairs = static_cast<std::size_t>(limit("gradient_min_pairs"));
  std::vector<PairExample> pairs;
  for (std::size_t i = 0; i < min_pairs + 20; ++i) pairs.push_back(to::random_pair(cfg, rng));
  const auto check = to::check_gradient(params, cfg, pairs, true, 1e-4);
  const double t = sw.seconds();
  const bool ok = check.max_relative_error < limit("gradient_max_relative_error") &&
                  check.checked > params.parameter_count() * 9 / 10 &&
                  t < seconds_limit("gradient");
  report(1, "gradient", ok,
         fmt("max rel err %.2e over %zu pairs, %zu/%zu params checked (%zu at ReLU kinks), %.1fs",
             check.max_relative_error, pairs.size(), check.checked, params.parameter_count(),
             check.skipped_at_kinks, t));
}

// ---- 2 -----------------------------------------------------------------------

void anchors() {
  LossConfig off;
  off.use_delta_ndcg = false;
  const double ln2 = pair_loss(0.7, 0.7, 1, 2, 1.0, off);
  const double d12 = delta_ndcg(1, 2);
  const double gain2 = ndcg_at_p(std::vector<EvalSample>{{{"a", "b", "c"}, "b", 1.0, false}}, 3);
  const double tol = limit("anchor_tolerance");
  const bool ok = std::abs(ln2 - std::log(2.0)) < limit("ln2_tolerance") &&
                  std::abs(d12 - 0.36907) < tol && std::abs(gain2 - 0.63093) < tol;
  report(2, "loss/ndcg anchors", ok,
         fmt("pair_loss(f,f) - ln2 = %.1e, delta_ndcg(1,2) = %.6f, gain at rank 2 = %.6f",
             ln2 - std::log(2.0), d12, gain2));
}

// ---- 3 -----------------------------------------------------------------------

void metrics() {
  Stopwatch sw;
  Rng rng(33);
  const auto samples = to::random_samples(1000, rng);
  const auto rep = evaluate_samples("x", samples);
  double worst = 0.0;
  auto cmp = [&](const SliceMetrics& m, const std::vector<EvalSample>& subset) {
    const auto want = to::naive_metrics(subset);
    for (auto [got, exp] : {std::pair{m.mrr, want.mrr}, {m.ndcg_at_1, want.ndcg1},
                            {m.ndcg_at_3, want.ndcg3}}) {
      worst = std::max(worst, got ? std::abs(*got - exp) : INFINITY);
    }
  };
  std::vector<EvalSample> with, without;
  for (const auto& s : samples) (s.context_present ? with : without).push_back(s);
  cmp(rep.all, samples);
  cmp(rep.with_past, with);
  cmp(rep.without_past, without);
  const double t = sw.seconds();
  report(3, "metric oracle", worst <= limit("metric_tolerance") && t < seconds_limit("metrics"),
         fmt("max |diff| %.1e over 1000 samples and 3 slices, %.2fs", worst, t));
}

// ---- 4 -----------------------------------------------------------------------

void trie() {
  Rng rng(44);
  const std::string alphabet = "abcde fgh";
  auto random_string = [&](std::size_t max_len) {
    std::string s;
    const auto len = uniform_index(rng, max_len + 1);
    for (std::uint64_t j = 0; j < len; ++j) s += alphabet[uniform_index(rng, alphabet.size())];
    return s;
  };
  std::vector<std::pair<std::string, double>> qs;
  while (qs.size() < 10000) {
    auto q = random_string(12);
    if (!q.empty()) qs.emplace_back(q, static_cast<double>(uniform_index(rng, 50)));
  }
  std::vector<std::string> prefixes;
  for (int i = 0; i < 1000; ++i) {
    if (i % 2 == 0) {
      const auto& q = qs[uniform_index(rng, qs.size())].first;
      prefixes.push_back(q.substr(0, uniform_index(rng, q.size() + 1)));
    } else {
      prefixes.push_back(random_string(4));
    }
  }
  Stopwatch sw;
  const auto index = PrefixTrie::build(qs, 0);
  std::size_t mismatches = 0, returned = 0;
  for (const auto& p : prefixes) {
    const auto got = index.lookup(p);
    returned += got.size();
    if (got != to::brute_force_lookup(qs, p)) ++mismatches;
  }
  const double t = sw.seconds();
  report(4, "trie oracle", mismatches == 0 && t < seconds_limit("trie"),
         fmt("%zu/1000 prefixes differ, %zu suggestions compared, %.1fs", mismatches, returned, t));
}

// ---- 5, 6, 7 -------------------------------------------------------------------

struct Pipeline {
  PreparedData data;
  std::shared_ptr<const StatsStore> stats;
  std::shared_ptr<const EmbeddingTable> emb;
  double seconds = 0.0;
};

Pipeline prepare(std::uint64_t seed) {
  Stopwatch sw;
  SyntheticConfig gen;
  gen.seed = seed;
  gen.sessions = manifest["end_to_end_data"]["sessions"].get<std::size_t>();
  PrepareOptions prep;
  prep.seed = manifest["end_to_end_data"]["prepare_seed"].get<std::uint64_t>();
  Pipeline p;
  p.data = prepare_data(generate_synthetic(gen).sessions, prep);
  p.stats = std::make_shared<const StatsStore>(p.data.stats);
  p.emb = std::make_shared<const EmbeddingTable>(
      train_query_embeddings(p.data.train_sessions, SkipgramConfig{}));
  p.seconds = sw.seconds();
  return p;
}

EvalReport train_and_evaluate(const Pipeline& p, bool ablate_context, bool ablate_delta,
                              double* seconds = nullptr) {
  Stopwatch sw;
  RankerTrainingOptions opt;
  opt.network.ablate_context = ablate_context;
  opt.network.ablate_delta_ndcg = ablate_delta;
  auto ckpt = std::make_shared<const Checkpoint>(train_checkpoint(
      p.data.train, p.data.validation, p.data.stats, *p.emb, FeatureLayout{}, opt));
  NeuralRanker ranker("m", ckpt, p.stats, p.emb);
  auto rep = evaluate(ranker, p.data.test);
  if (seconds) *seconds = sw.seconds();
  return rep;
}

void synthetic_criteria() {
  const auto seed = manifest["end_to_end_data"]["generator_seed"].get<std::uint64_t>();
  std::optional<Pipeline> main;
  std::optional<EvalReport> full;
  double train_s = 0;
  auto ensure_main = [&] {
    if (full) return;
    main = prepare(seed);
    full = train_and_evaluate(*main, false, false, &train_s);
  };

  run(5, "beats mpc", [&] {
    ensure_main();
    const auto mpc = evaluate(MpcRanker(std::make_shared<const PopularityIndex>(*main->stats)),
                              main->data.test);
    const double gain = *full->all.mrr - *mpc.all.mrr;
    const double t = main->seconds + train_s;
    report(5, "beats mpc", gain >= limit("mrr_gain_over_mpc") && t < seconds_limit("end_to_end"),
           fmt("MRR %.4f vs mpc %.4f: %+.4f (need >= %+.2f) on %zu cases, %.0fs", *full->all.mrr,
               *mpc.all.mrr, gain, limit("mrr_gain_over_mpc"), main->data.test.size(), t));
  });

  run(6, "context effect", [&] {
    ensure_main();
    const auto blind = train_and_evaluate(*main, true, false);
    const double swps = *full->with_past.mrr - *blind.with_past.mrr;
    const double swops = *full->without_past.mrr - *blind.without_past.mrr;
    const bool ok = swps >= limit("swps_context_gain") &&
                    std::abs(swops) <= limit("swops_context_tolerance");
    report(6, "context effect", ok,
           fmt("SWPS MRR %+.4f (need >= %+.2f, n=%zu), SWOPS MRR %+.4f (need within %.2f, n=%zu)",
               swps, limit("swps_context_gain"), full->with_past.count, swops,
               limit("swops_context_tolerance"), full->without_past.count));
  });

  run(7, "delta-ndcg ablation", [&] {
    std::string per_seed;
    double sum = 0;
    int n = 0;
    for (const auto& s : manifest["delta_ablation_seeds"]) {
      const auto sd = s.get<std::uint64_t>();
      double on, off;
      if (sd == seed) {
        ensure_main();
        on = *full->all.ndcg_at_1;
        off = *train_and_evaluate(*main, false, true).all.ndcg_at_1;
      } else {
        const auto p = prepare(sd);
        on = *train_and_evaluate(p, false, false).all.ndcg_at_1;
        off = *train_and_evaluate(p, false, true).all.ndcg_at_1;
      }
      per_seed += fmt(" %llu:%+.4f", static_cast<unsigned long long>(sd), on - off);
      sum += on - off;
      ++n;
    }
    const double mean = sum / n;
    report(7, "delta-ndcg ablation", mean >= limit("ndcg1_delta_gain"),
           fmt("NDCG@1 on - off, mean %+.4f (need >= %+.2f); per seed%s", mean,
               limit("ndcg1_delta_gain"), per_seed.c_str()));
  });
}

// ---- 8 -----------------------------------------------------------------------

void embeddings() {
  Stopwatch sw;
  SkipgramConfig cfg;
  cfg.dim = 50;
  cfg.epochs = 10;
  cfg.seed = 8;
  const auto table = train_skipgram(build_corpus(two_cluster_corpus(1000, 20, 10, 8), 1), cfg);
  const double sep = to::cluster_separation(table);

  Rng rng(88);
  std::normal_distribution<double> nd(0.0, 0.5);
  auto vec = [&] {
    std::vector<double> v(50);
    for (auto& x : v) x = nd(rng);
    return v;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = vec(), c = vec();
    const std::vector<std::vector<double>> negs = {vec(), vec(), vec(), vec(), vec()};
    std::vector<double> dt, dc;
    std::vector<std::vector<double>> dn;
    skipgram_example_grad(t, c, negs, dt, dc, dn);
    worst = std::max(worst, to::skipgram_fd_max_relative_error(t, c, negs, dt, dc, dn));
  }
  const double secs = sw.seconds();
  const bool ok = sep >= limit("cluster_separation") &&
                  worst < limit("skipgram_gradient_relative_error") &&
                  secs < seconds_limit("embeddings");
  report(8, "embedding quality", ok,
         fmt("intra - inter cosine %.3f (need >= %.1f), gradient rel err %.1e, %.1fs", sep,
             limit("cluster_separation"), worst, secs));
}

// ---- 9 -----------------------------------------------------------------------

std::string dir_bytes(const std::filesystem::path& dir) {
  std::string all;
  for (const char* f : {PreparedFiles::kTrainPairs, PreparedFiles::kValidationPairs,
                        PreparedFiles::kEval, PreparedFiles::kStats, PreparedFiles::kQueries,
                        PreparedFiles::kTrainSessions}) {
    all += std::string(f) + '\n' + read_file(dir / f);
  }
  return all;
}

void determinism() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / ("acrank_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  std::vector<std::string> problems;

  SyntheticConfig gen;
  gen.sessions = 1000;
  gen.seed = 9;
  const auto sessions = generate_synthetic(gen).sessions;

  struct Outputs {
    std::string prepared, embeddings, checkpoint, report;
  };
  auto once = [&](int i) {
    Outputs o;
    const auto prepared = prepare_data(sessions, PrepareOptions{});
    write_prepared(prepared, root / std::to_string(i));
    o.prepared = dir_bytes(root / std::to_string(i));
    SkipgramConfig sg;
    sg.epochs = 5;
    auto emb = std::make_shared<const EmbeddingTable>(train_query_embeddings(prepared.train_sessions, sg));
    std::ostringstream es;
    save_embeddings(*emb, es, true);
    o.embeddings = es.str();
    RankerTrainingOptions opt;
    opt.train.epochs = 2;
    auto ckpt = std::make_shared<const Checkpoint>(train_checkpoint(
        prepared.train, prepared.validation, prepared.stats, *emb, FeatureLayout{}, opt));
    std::ostringstream cs;
    save_checkpoint(*ckpt, cs);
    o.checkpoint = cs.str();
    auto stats = std::make_shared<const StatsStore>(prepared.stats);
    const auto rep = evaluate(NeuralRanker("deeppltr", ckpt, stats, emb), prepared.test);
    o.report = report_json({rep}, "deeppltr");
    return o;
  };
  const auto a = once(1), b = once(2);
  if (a.prepared != b.prepared) problems.push_back("prepare-data");
  if (a.embeddings != b.embeddings) problems.push_back("embeddings");
  if (a.checkpoint != b.checkpoint) problems.push_back("train-ranker");
  if (a.report != b.report) problems.push_back("evaluate");

  // Checkpoint: load then save reproduces the bytes, and the loaded model scores identically.
  {
    std::istringstream in(a.checkpoint);
    const auto loaded = load_checkpoint(in);
    std::ostringstream again;
    save_checkpoint(loaded, again);
    if (again.str() != a.checkpoint) problems.push_back("checkpoint round-trip");
    std::istringstream in2(a.checkpoint);
    const auto reference = load_checkpoint(in2);
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
      const auto x = to::random_features(loaded.network, rng);
      if (forward_score(loaded.params, loaded.network, x) !=
          forward_score(reference.params, reference.network, x)) {
        problems.push_back("checkpoint scores");
        break;
      }
    }
  }
  // Embeddings: load equals the saved table, and saving it again gives the same file.
  {
    std::istringstream in(a.embeddings);
    const auto loaded = load_embeddings(in);
    std::ostringstream again;
    save_embeddings(loaded, again, true);
    if (again.str() != a.embeddings) problems.push_back("embedding round-trip");
  }
  fs::remove_all(root);

  std::string detail = problems.empty() ? "prepare, embeddings, train, evaluate byte-identical; "
                                          "checkpoint and embedding files round-trip exactly"
                                        : "differs:";
  for (const auto& p : problems) detail += " " + p;
  report(9, "determinism", problems.empty(), detail);
}

}  // namespace

// Optional arguments pick criteria by number, e.g. `acceptance 5 6`.
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  manifest = json::parse(read_file(std::string(ACRANK_FIXTURES) + "/acceptance_manifest.json"));
  run(1, "gradient", gradient);
  run(2, "loss/ndcg anchors", anchors);
  run(3, "metric oracle", metrics);
  run(4, "trie oracle", trie);
  synthetic_criteria();
  run(8, "embedding quality", embeddings);
  run(9, "determinism", determinism);

  // Criteria the manifest lists as known failures still print FAIL above; they
  // only stop the run from exiting nonzero. Anything else failing does.
  std::set<int> known;
  for (const auto& k : manifest["known_failures"]) known.insert(k["criterion"].get<int>());
  int unexpected = 0;
  for (int id : failed) {
    if (known.count(id)) {
      std::printf("criterion %d failed (known failure, see manifest)\n", id);
    } else {
      ++unexpected;
    }
  }
  for (int id : known) {
    if (wanted(id) && std::find(failed.begin(), failed.end(), id) == failed.end()) {
      std::printf("criterion %d listed as a known failure but passed\n", id);
    }
  }
  std::printf("%zu criteria failed, %d unexpected\n", failed.size(), unexpected);
  return unexpected == 0 ? 0 : 1;
}
