#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "acrank/baseline_rankers.hpp"
#include "acrank/checkpoint.hpp"
#include "acrank/http_api.hpp"
#include "acrank/io.hpp"
#include "acrank/manifest.hpp"
#include "acrank/pipeline.hpp"
#include "acrank/synthetic.hpp"

namespace acrank {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct LayoutFlags {
  int series_length = 7;
  int context_length = 3;
  double half_life_days = 7.0;
  double context_ttl_minutes = 30.0;

  void add(CLI::App* app) {
    app->add_option("--series-length", series_length, "Days of popularity history (H)")
        ->check(CLI::PositiveNumber);
    app->add_option("--context-length", context_length, "Past searches used as context (K)")
        ->check(CLI::PositiveNumber);
    app->add_option("--half-life-days", half_life_days, "Popularity decay half-life")
        ->check(CLI::PositiveNumber);
    app->add_option("--context-ttl-minutes", context_ttl_minutes, "Context time-to-live")
        ->check(CLI::NonNegativeNumber);
  }
  FeatureLayout layout() const {
    FeatureLayout l;
    l.series_length = series_length;
    l.context_length = context_length;
    l.half_life_days = half_life_days;
    l.context_ttl_ms = static_cast<std::int64_t>(context_ttl_minutes * 60'000.0);
    return l;
  }
  ordered_json json() const {
    return {{"series_length", series_length},
            {"context_length", context_length},
            {"half_life_days", half_life_days},
            {"context_ttl_minutes", context_ttl_minutes}};
  }
};

// ---- gen-synthetic -------------------------------------------------------------

struct GenArgs {
  SyntheticConfig cfg;
  std::string out;
  std::string catalog_out;
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* c = app.add_subcommand("gen-synthetic", "Write a synthetic session log");
  c->add_option("--out", a.out, "Session log (JSONL)")->required();
  c->add_option("--catalog-out", a.catalog_out, "Hidden query attributes (TSV)");
  c->add_option("--sessions", a.cfg.sessions);
  c->add_option("--days", a.cfg.days)->check(CLI::PositiveNumber);
  c->add_option("--context-rate", a.cfg.context_rate)->check(CLI::Range(0.0, 1.0));
  c->add_option("--context-weight", a.cfg.context_weight);
  c->add_option("--popularity-weight", a.cfg.popularity_weight);
  c->add_option("--price-weight", a.cfg.price_weight);
  c->add_option("--trend-weight", a.cfg.trend_weight);
  c->add_option("--logging-noise", a.cfg.logging_noise)->check(CLI::NonNegativeNumber);
  c->add_option("--logging-utility", a.cfg.logging_utility)->check(CLI::Range(0.0, 1.0));
  c->add_option("--click-decay", a.cfg.click_decay)->check(CLI::Range(0.0, 1.0));
  c->add_option("--tail-click-rate", a.cfg.tail_click_rate)->check(CLI::Range(0.0, 1.0));
  c->add_flag("--tail-prefers-longest", a.cfg.tail_prefers_longest);
  c->add_option("--zero-gmv-rate", a.cfg.zero_gmv_rate)->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", a.cfg.seed);
}

int run_gen(const GenArgs& a, std::ostream& out) {
  const auto data = generate_synthetic(a.cfg);
  std::string log;
  for (const auto& s : data.sessions) log += format_session_line(s) + "\n";
  write_file_atomic(a.out, log);

  RunManifest m;
  m.subcommand = "gen-synthetic";
  m.seed = a.cfg.seed;
  const auto& c = a.cfg;
  m.config = {{"sessions", c.sessions},           {"days", c.days},
              {"context_rate", c.context_rate},   {"context_weight", c.context_weight},
              {"popularity_weight", c.popularity_weight},
              {"price_weight", c.price_weight},   {"trend_weight", c.trend_weight},
              {"logging_noise", c.logging_noise}, {"logging_utility", c.logging_utility},
              {"click_decay", c.click_decay},
              {"tail_click_rate", c.tail_click_rate},
              {"tail_prefers_longest", c.tail_prefers_longest},
              {"zero_gmv_rate", c.zero_gmv_rate}};
  m.outputs["sessions"] = fs::path(a.out).filename().string();
  if (!a.catalog_out.empty()) {
    std::ostringstream cat;
    cat.precision(17);
    cat << "query\ttopic\tbase_popularity\tprice\ttrend\n";
    for (const auto& q : data.catalog) {
      cat << q.text << '\t' << data.topics[static_cast<std::size_t>(q.topic)] << '\t'
          << q.base_popularity << '\t' << q.price << '\t' << q.trend << '\n';
    }
    write_file_atomic(a.catalog_out, cat.str());
    m.outputs["catalog"] = fs::path(a.catalog_out).filename().string();
  }
  write_manifest(m, manifest_path_for(a.out));
  out << "wrote " << data.sessions.size() << " sessions to " << a.out << "\n";
  return 0;
}

// ---- prepare-data --------------------------------------------------------------

struct PrepareArgs {
  std::string sessions;
  std::string out_dir;
  PrepareOptions opt;
  std::string weight_mode = "log1p_gmv";
  std::string eval_weight_mode = "gmv";
  bool strict = false;
  LayoutFlags layout;
};

const std::vector<std::string> kWeightModes = {"gmv", "unit", "log1p_gmv"};

void add_prepare(CLI::App& app, PrepareArgs& a) {
  auto* c = app.add_subcommand("prepare-data", "Session log -> pairs, eval cases, stats");
  c->add_option("--sessions", a.sessions, "Session log (JSONL)")->required();
  c->add_option("--out-dir", a.out_dir)->required();
  c->add_option("--test-fraction", a.opt.test_fraction)->check(CLI::Range(0.0, 1.0));
  c->add_option("--validation-fraction", a.opt.validation_fraction)->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", a.opt.seed);
  c->add_option("--weight-mode", a.weight_mode)->check(CLI::IsMember(kWeightModes));
  c->add_option("--eval-weight-mode", a.eval_weight_mode)->check(CLI::IsMember(kWeightModes));
  c->add_flag("--gmv-positive-only", a.opt.gmv_positive_only,
              "Drop sessions without GMV from the training pairs");
  c->add_flag("--strict", a.strict, "Fail on the first malformed line");
  a.layout.add(c);
}

int run_prepare(PrepareArgs a, std::ostream& out, std::ostream& err) {
  a.opt.weight_mode = parse_weight_mode(a.weight_mode);
  a.opt.eval_weight_mode = parse_weight_mode(a.eval_weight_mode);
  a.opt.layout = a.layout.layout();

  std::ifstream in(a.sessions);
  if (!in) throw IoError("cannot read " + a.sessions);
  const auto log = parse_session_log(in, a.strict ? ParseMode::kStrict : ParseMode::kSkipAndReport);
  for (const auto& e : log.errors) err << "skipped line " << e.line << ": " << e.message << "\n";

  const auto data = prepare_data(log.sessions, a.opt);
  write_prepared(data, a.out_dir);

  const auto pairs = data.train.size() + data.validation.size();
  if (pairs == 0) {
    err << "warning: no training pairs"
        << (a.opt.gmv_positive_only ? " (every session was dropped by --gmv-positive-only)" : "")
        << "\n";
  }

  RunManifest m;
  m.subcommand = "prepare-data";
  m.seed = a.opt.seed;
  m.config = {{"test_fraction", a.opt.test_fraction},
              {"validation_fraction", a.opt.validation_fraction},
              {"weight_mode", a.weight_mode},
              {"eval_weight_mode", a.eval_weight_mode},
              {"gmv_positive_only", a.opt.gmv_positive_only},
              {"layout", a.layout.json()}};
  m.inputs["sessions"] = a.sessions;
  m.outputs["train_pairs"] = PreparedFiles::kTrainPairs;
  m.outputs["validation_pairs"] = PreparedFiles::kValidationPairs;
  m.outputs["eval"] = PreparedFiles::kEval;
  m.outputs["stats"] = PreparedFiles::kStats;
  m.outputs["queries"] = PreparedFiles::kQueries;
  m.outputs["train_sessions"] = PreparedFiles::kTrainSessions;
  write_manifest(m, fs::path(a.out_dir) / "manifest.json");

  out << "sessions " << log.sessions.size() << " (skipped lines " << log.errors.size()
      << ")\n"
      << "train pairs " << data.train.size() << ", validation pairs " << data.validation.size()
      << ", eval cases " << data.test.size() << "\n";
  return 0;
}

// ---- train-embeddings ----------------------------------------------------------

struct EmbedArgs {
  std::string sessions;
  std::string queries;
  std::string out;
  SkipgramConfig cfg;
  int horizon_days = kDefaultHorizonDays;
  bool with_context = false;
};

void add_embed(CLI::App& app, EmbedArgs& a) {
  auto* c = app.add_subcommand("train-embeddings", "Skipgram whole-query embeddings");
  auto* s = c->add_option("--sessions", a.sessions, "Session log (JSONL)");
  auto* q = c->add_option("--queries", a.queries, "One stream of \"ts_ms<TAB>query\" lines");
  s->excludes(q);
  c->add_option("--out", a.out)->required();
  c->add_option("--dim", a.cfg.dim);
  c->add_option("--window", a.cfg.window);
  c->add_option("--negatives", a.cfg.negatives);
  c->add_option("--epochs", a.cfg.epochs);
  c->add_option("--learning-rate", a.cfg.initial_learning_rate);
  c->add_option("--min-count", a.cfg.min_count);
  c->add_option("--seed", a.cfg.seed);
  c->add_option("--threads", a.cfg.threads, "More than one thread is not deterministic");
  c->add_flag("--with-context-vectors", a.with_context);
  c->add_option("--horizon-days", a.horizon_days,
                "Keep searches from this many days before the newest one (0: all)")
      ->check(CLI::NonNegativeNumber);
}

std::vector<std::vector<std::string>> documents_from_query_stream(const std::string& path,
                                                                 int horizon_days) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<QueryEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw IoError(path + ":" + std::to_string(n) + ": missing tab");
    events.push_back({line.substr(tab + 1), std::stoll(line.substr(0, tab))});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& x, const auto& y) { return x.ts_ms < y.ts_ms; });
  apply_horizon(events, horizon_days);
  return sessionize(events);
}

int run_embed(const EmbedArgs& a, std::ostream& out) {
  if (a.sessions.empty() == a.queries.empty()) {
    throw CLI::ValidationError("train-embeddings", "give exactly one of --sessions, --queries");
  }
  a.cfg.validate();
  const auto docs = a.sessions.empty()
      ? documents_from_query_stream(a.queries, a.horizon_days)
      : documents_from_sessions(read_sessions_file(a.sessions), a.horizon_days);
  const auto corpus = build_corpus(docs, a.cfg.min_count);
  SkipgramReport report;
  const auto table = train_skipgram(corpus, a.cfg, &report);
  std::ostringstream buf;
  save_embeddings(table, buf, a.with_context);
  write_file_atomic(a.out, buf.str());

  RunManifest m;
  m.subcommand = "train-embeddings";
  m.seed = a.cfg.seed;
  m.config = {{"dim", a.cfg.dim},
              {"window", a.cfg.window},
              {"negatives", a.cfg.negatives},
              {"epochs", a.cfg.epochs},
              {"learning_rate", a.cfg.initial_learning_rate},
              {"min_count", a.cfg.min_count},
              {"unigram_power", a.cfg.unigram_power},
              {"threads", a.cfg.threads},
              {"horizon_days", a.horizon_days}};
  if (!a.sessions.empty()) m.inputs["sessions"] = a.sessions;
  if (!a.queries.empty()) m.inputs["queries"] = a.queries;
  m.outputs["embeddings"] = fs::path(a.out).filename().string();
  write_manifest(m, manifest_path_for(a.out));

  out << "vocabulary " << table.size() << ", documents " << corpus.documents.size() << "\n";
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    out << "epoch " << e + 1 << " loss " << report.epoch_loss[e] << "\n";
  }
  return 0;
}

// ---- train-ranker --------------------------------------------------------------

struct TrainArgs {
  std::string train, validation, stats, embeddings, out;
  RankerTrainingOptions opt;
  double learning_rate = 1e-3;
  LayoutFlags layout;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train-ranker", "Pairwise training of the scoring network");
  c->add_option("--train", a.train, "Training pairs (JSONL)")->required();
  c->add_option("--validation", a.validation, "Validation pairs (JSONL)");
  c->add_option("--stats", a.stats, "Behavioral stats (JSONL)")->required();
  c->add_option("--embeddings", a.embeddings, "Query embeddings");
  c->add_option("--out", a.out, "Checkpoint path")->required();
  c->add_option("--epochs", a.opt.train.epochs)->check(CLI::PositiveNumber);
  c->add_option("--batch-size", a.opt.train.batch_size)->check(CLI::PositiveNumber);
  c->add_option("--learning-rate", a.learning_rate)->check(CLI::PositiveNumber);
  c->add_option("--seed", a.opt.train.seed);
  c->add_option("--dropout", a.opt.network.dropout_rate)->check(CLI::Range(0.0, 0.99));
  c->add_option("--query-units", a.opt.network.query_units)->check(CLI::PositiveNumber);
  c->add_option("--lstm-units", a.opt.network.lstm_units)->check(CLI::PositiveNumber);
  c->add_option("--context-units", a.opt.network.context_units)->check(CLI::PositiveNumber);
  c->add_option("--merge-units", a.opt.network.merge_units)->check(CLI::PositiveNumber);
  c->add_option("--weight-mode", a.opt.weight_mode, "Recorded in the checkpoint metadata")
      ->check(CLI::IsMember(kWeightModes));
  c->add_flag("--ablate-delta-ndcg", a.opt.network.ablate_delta_ndcg,
              "Train without the delta-NDCG pair scaling");
  c->add_flag("--ablate-context", a.opt.network.ablate_context,
              "Zero the context block during training and scoring");
  a.layout.add(c);
}

int run_train(TrainArgs a, std::ostream& out) {
  auto layout = a.layout.layout();
  const auto stats = read_stats_file(a.stats, layout.series_length, layout.half_life_days);
  EmbeddingTable emb;
  if (!a.embeddings.empty()) {
    emb = load_embeddings_file(a.embeddings);
    layout.embedding_dim = emb.dim();
  }
  const auto train = read_pairs_file(a.train);
  const auto val = a.validation.empty() ? std::vector<TrainingPair>{} : read_pairs_file(a.validation);
  a.opt.network.seed = a.opt.train.seed;
  a.opt.train.adam.learning_rate = a.learning_rate;
  a.opt.train.on_epoch = [&out](int epoch, double tl, double vl) {
    out << "epoch " << epoch << " train " << tl << " validation " << vl << "\n";
  };
  const auto ckpt = train_checkpoint(train, val, stats, emb, layout, a.opt);
  save_checkpoint_file(ckpt, a.out);

  RunManifest m;
  m.subcommand = "train-ranker";
  m.seed = a.opt.train.seed;
  const auto& n = ckpt.network;
  m.config = {{"epochs", a.opt.train.epochs},
              {"batch_size", a.opt.train.batch_size},
              {"learning_rate", a.learning_rate},
              {"dropout", n.dropout_rate},
              {"units", {n.query_units, n.lstm_units, n.context_units, n.merge_units}},
              {"ablate_delta_ndcg", n.ablate_delta_ndcg},
              {"ablate_context", n.ablate_context},
              {"weight_mode", a.opt.weight_mode},
              {"layout", a.layout.json()}};
  m.inputs["train"] = a.train;
  if (!a.validation.empty()) m.inputs["validation"] = a.validation;
  m.inputs["stats"] = a.stats;
  if (!a.embeddings.empty()) m.inputs["embeddings"] = a.embeddings;
  m.outputs["checkpoint"] = fs::path(a.out).filename().string();
  write_manifest(m, manifest_path_for(a.out));
  out << "best epoch " << ckpt.training.best_epoch << ", checkpoint " << a.out << "\n";
  return 0;
}

// ---- evaluate ------------------------------------------------------------------

struct EvalArgs {
  std::string eval, stats, embeddings, out, baseline;
  std::vector<std::string> baselines;
  std::vector<std::string> models;  // name=path
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("evaluate", "Weighted MRR / NDCG report per slice");
  c->add_option("--eval", a.eval, "Eval cases (JSONL)")->required();
  c->add_option("--stats", a.stats, "Behavioral stats (JSONL)")->required();
  c->add_option("--embeddings", a.embeddings, "Query embeddings (needed by models)");
  c->add_option("--ranker", a.baselines, "Baseline ranker: mpc or mpgc (repeatable)")
      ->check(CLI::IsMember({"mpc", "mpgc"}));
  c->add_option("--model", a.models, "name=checkpoint (repeatable)");
  c->add_option("--baseline", a.baseline, "Row the deltas are computed against");
  c->add_option("--out", a.out, "Report (JSON)");
}

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.baselines.empty() && a.models.empty()) {
    throw CLI::ValidationError("evaluate", "give at least one --ranker or --model");
  }
  const auto cases = read_eval_file(a.eval);
  RunManifest m;
  m.subcommand = "evaluate";
  m.inputs["eval"] = a.eval;
  m.inputs["stats"] = a.stats;

  std::vector<std::shared_ptr<const Ranker>> rankers;
  std::shared_ptr<const PopularityIndex> index;
  if (!a.baselines.empty()) {
    index = std::make_shared<const PopularityIndex>(read_stats_file(a.stats));
  }
  for (const auto& b : a.baselines) {
    if (b == "mpc") rankers.push_back(std::make_shared<MpcRanker>(index));
    if (b == "mpgc") rankers.push_back(std::make_shared<MpgcRanker>(index));
  }
  std::shared_ptr<const EmbeddingTable> emb;
  if (!a.models.empty()) {
    emb = std::make_shared<const EmbeddingTable>(
        a.embeddings.empty() ? EmbeddingTable{} : load_embeddings_file(a.embeddings));
    if (!a.embeddings.empty()) m.inputs["embeddings"] = a.embeddings;
  }
  for (const auto& spec : a.models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError("--model", "expected name=path, got " + spec);
    }
    const auto name = spec.substr(0, eq);
    const auto path = spec.substr(eq + 1);
    auto ckpt = std::make_shared<const Checkpoint>(load_checkpoint_file(path));
    auto stats = std::make_shared<const StatsStore>(read_stats_file(
        a.stats, ckpt->layout.series_length, ckpt->layout.half_life_days));
    rankers.push_back(std::make_shared<NeuralRanker>(name, ckpt, stats, emb));
    m.inputs["model:" + name] = path;
    if (fs::exists(manifest_path_for(path))) {
      m.upstream["model:" + name] = git_blob_sha1_file(manifest_path_for(path));
    }
  }

  std::vector<EvalReport> reports;
  for (const auto& r : rankers) {
    reports.push_back(evaluate(*r, cases));
    for (const auto& msg : reports.back().error_messages) err << r->id() << ": " << msg << "\n";
  }
  const auto baseline = a.baseline.empty() ? reports.front().ranker_id : a.baseline;
  out << report_table(reports, baseline);
  if (!a.out.empty()) {
    write_file_atomic(a.out, report_json(reports, baseline));
    m.config = {{"rankers", a.baselines}, {"models", a.models}, {"baseline", baseline}};
    m.outputs["report"] = fs::path(a.out).filename().string();
    write_manifest(m, manifest_path_for(a.out));
  }
  return 0;
}

// ---- serve ---------------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string trie, stats, embeddings, checkpoint, ndcg_checkpoint, context_blind_checkpoint;
  std::size_t shortlist = PrefixTrie::kDefaultShortlist;
};

void add_serve(CLI::App& app, ServeArgs& a) {
  auto* c = app.add_subcommand("serve", "HTTP suggestion service");
  c->add_option("--host", a.host);
  c->add_option("--port", a.port, "0 binds an ephemeral port")->envname("ACRANK_PORT");
  c->add_option("--trie", a.trie, "query<TAB>popularity list; default: stats keys")
      ->envname("ACRANK_TRIE");
  c->add_option("--stats", a.stats)->envname("ACRANK_STATS")->required();
  c->add_option("--embeddings", a.embeddings)->envname("ACRANK_EMBEDDINGS");
  c->add_option("--checkpoint", a.checkpoint)->envname("ACRANK_CHECKPOINT");
  c->add_option("--ndcg-checkpoint", a.ndcg_checkpoint, "Served as deeppltr-ndcg");
  c->add_option("--context-blind-checkpoint", a.context_blind_checkpoint,
                "Served as context-blind; default: main checkpoint without context");
  c->add_option("--shortlist", a.shortlist, "Per-prefix candidate cap (0 = unlimited)");
}

HttpServer* g_server = nullptr;

int run_serve(const ServeArgs& a, std::ostream& out) {
  ServiceAssets assets;
  int h = 7;
  double hl = 7.0;
  if (!a.checkpoint.empty()) {
    assets.checkpoint = std::make_shared<const Checkpoint>(load_checkpoint_file(a.checkpoint));
    h = assets.checkpoint->layout.series_length;
    hl = assets.checkpoint->layout.half_life_days;
  }
  auto load_other = [&](const std::string& path) -> std::shared_ptr<const Checkpoint> {
    if (path.empty()) return nullptr;
    auto c = std::make_shared<const Checkpoint>(load_checkpoint_file(path));
    if (assets.checkpoint) require_layout(assets.checkpoint->layout, c->layout);
    return c;
  };
  assets.ndcg_ablated = load_other(a.ndcg_checkpoint);
  assets.context_ablated = load_other(a.context_blind_checkpoint);
  assets.stats = std::make_shared<const StatsStore>(read_stats_file(a.stats, h, hl));
  assets.embeddings = std::make_shared<const EmbeddingTable>(
      a.embeddings.empty() ? EmbeddingTable{} : load_embeddings_file(a.embeddings));
  if (a.trie.empty()) {
    assets.queries = queries_from_stats(*assets.stats);
  } else {
    std::ifstream in(a.trie);
    if (!in) throw IoError("cannot read " + a.trie);
    assets.queries = read_query_list(in);
  }
  assets.shortlist_size = a.shortlist;
  const auto layout = assets.checkpoint ? assets.checkpoint->layout : FeatureLayout{};
  auto store = std::make_shared<SessionContextStore>(
      static_cast<std::size_t>(layout.context_length), layout.context_ttl_ms);
  HttpServer server(make_service(assets, store));
  const int port = server.bind(a.host, a.port);
  out << "listening on " << a.host << ":" << port << std::endl;
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return 0;
}

// ---- inspect-checkpoint --------------------------------------------------------

struct InspectArgs {
  std::string checkpoint;
};

void add_inspect(CLI::App& app, InspectArgs& a) {
  auto* c = app.add_subcommand("inspect-checkpoint", "Dump a checkpoint as JSON");
  c->add_option("checkpoint", a.checkpoint)->required();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware autocomplete ranking toolkit", "acrank"};
  app.set_config("--config", "", "TOML file mirroring the flags; [subcommand] sections");
  app.require_subcommand(1);

  GenArgs gen;
  PrepareArgs prep;
  EmbedArgs embed;
  TrainArgs train;
  EvalArgs eval;
  ServeArgs serve;
  InspectArgs inspect;
  add_gen(app, gen);
  add_prepare(app, prep);
  add_embed(app, embed);
  add_train(app, train);
  add_eval(app, eval);
  add_serve(app, serve);
  add_inspect(app, inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every usage error is 2 regardless of CLI11's own codes.
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const auto name = sub->get_name();
    if (name == "gen-synthetic") return run_gen(gen, out);
    if (name == "prepare-data") return run_prepare(prep, out, err);
    if (name == "train-embeddings") return run_embed(embed, out);
    if (name == "train-ranker") return run_train(train, out);
    if (name == "evaluate") return run_eval(eval, out, err);
    if (name == "serve") return run_serve(serve, out);
    if (name == "inspect-checkpoint") {
      out << export_checkpoint_text(load_checkpoint_file(inspect.checkpoint)) << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace acrank
