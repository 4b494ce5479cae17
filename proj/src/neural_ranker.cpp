#include "acrank/neural_ranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "acrank/query_embedding.hpp"

namespace acrank {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

NetworkConfig NetworkConfig::for_layout(const FeatureLayout& layout) {
  NetworkConfig cfg;
  cfg.dense_length = layout.dense_length();
  cfg.series_length = layout.series_length;
  cfg.context_length = layout.context_block_length();
  return cfg;
}

void NetworkConfig::validate() const {
  if (dense_length <= 0 || series_length <= 0 || context_length <= 0 ||
      query_units <= 0 || lstm_units <= 0 || context_units <= 0 || merge_units <= 0) {
    throw std::invalid_argument("network sizes must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
}

// ---- parameters ------------------------------------------------------------

ModelParams ModelParams::zeros(const NetworkConfig& c) {
  c.validate();
  ModelParams p;
  const int gates = 4 * c.lstm_units;
  p.query_w = MatrixXd::Zero(c.query_units, c.dense_length);
  p.query_b = MatrixXd::Zero(c.query_units, 1);
  p.lstm_wx = MatrixXd::Zero(gates, 1);
  p.lstm_wh = MatrixXd::Zero(gates, c.lstm_units);
  p.lstm_b = MatrixXd::Zero(gates, 1);
  p.context_w = MatrixXd::Zero(c.context_units, c.context_length);
  p.context_b = MatrixXd::Zero(c.context_units, 1);
  p.merge_w = MatrixXd::Zero(c.merge_units, c.query_units + c.lstm_units + c.context_units);
  p.merge_b = MatrixXd::Zero(c.merge_units, 1);
  p.out_w = MatrixXd::Zero(1, c.merge_units);
  p.out_b = MatrixXd::Zero(1, 1);
  return p;
}

ModelParams ModelParams::initialize(const NetworkConfig& c, Rng& rng) {
  ModelParams p = zeros(c);
  auto glorot = [&rng](MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -limit, limit);
    }
  };
  glorot(p.query_w);
  glorot(p.lstm_wx);
  glorot(p.lstm_wh);
  glorot(p.context_w);
  glorot(p.merge_w);
  glorot(p.out_w);
  p.lstm_b.block(c.lstm_units, 0, c.lstm_units, 1).setOnes();
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](std::string_view, const MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

bool ModelParams::operator==(const ModelParams& o) const {
  std::vector<const MatrixXd*> mine, theirs;
  for_each([&](std::string_view, const MatrixXd& m) { mine.push_back(&m); });
  o.for_each([&](std::string_view, const MatrixXd& m) { theirs.push_back(&m); });
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i]->rows() != theirs[i]->rows() || mine[i]->cols() != theirs[i]->cols() ||
        *mine[i] != *theirs[i]) {
      return false;
    }
  }
  return true;
}

// ---- batches ---------------------------------------------------------------

void check_layout(const FeatureVector& fv, const NetworkConfig& cfg) {
  if (fv.dense.size() != static_cast<std::size_t>(cfg.dense_length) ||
      fv.series.size() != static_cast<std::size_t>(cfg.series_length) ||
      fv.context.size() != static_cast<std::size_t>(cfg.context_length)) {
    throw LayoutError("feature layout mismatch: got dense/series/context " +
                      std::to_string(fv.dense.size()) + "/" +
                      std::to_string(fv.series.size()) + "/" +
                      std::to_string(fv.context.size()) + ", model expects " +
                      std::to_string(cfg.dense_length) + "/" +
                      std::to_string(cfg.series_length) + "/" +
                      std::to_string(cfg.context_length));
  }
}

FeatureBatch FeatureBatch::from(std::span<const FeatureVector* const> rows,
                                const NetworkConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  FeatureBatch b;
  b.dense.resize(cfg.dense_length, n);
  b.series.resize(cfg.series_length, n);
  b.context.resize(cfg.context_length, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& fv = *rows[static_cast<std::size_t>(j)];
    check_layout(fv, cfg);
    for (int i = 0; i < cfg.dense_length; ++i) b.dense(i, j) = fv.dense[i];
    for (int i = 0; i < cfg.series_length; ++i) b.series(i, j) = fv.series[i];
    for (int i = 0; i < cfg.context_length; ++i) b.context(i, j) = fv.context[i];
  }
  return b;
}

// ---- forward / backward ----------------------------------------------------

namespace {

ArrayXXd sigmoid(const ArrayXXd& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      mask(i, j) = uniform01(rng) < rate ? 0.0 : keep_scale;
    }
  }
  return mask;
}

struct ForwardCache {
  MatrixXd context_in;
  MatrixXd zq, zc, zm;
  MatrixXd q, r, h_out, merged, hidden;
  std::vector<MatrixXd> h, c, gi, gf, gg, go;  // per step; h[0], c[0] are zero
  MatrixXd mask_q, mask_h, mask_r;
  bool dropout = false;
};

RowVectorXd forward(const ModelParams& p, const NetworkConfig& cfg, const FeatureBatch& b,
                    bool training, Rng* rng, ForwardCache& k) {
  const auto n = static_cast<Eigen::Index>(b.size());
  const int units = cfg.lstm_units;
  k.dropout = training && cfg.dropout_rate > 0.0;
  if (k.dropout && rng == nullptr) throw std::invalid_argument("training forward needs an rng");

  k.zq = (p.query_w * b.dense).colwise() + p.query_b.col(0);
  k.q = k.zq.cwiseMax(0.0);

  k.h.assign(1, MatrixXd::Zero(units, n));
  k.c.assign(1, MatrixXd::Zero(units, n));
  k.gi.clear();
  k.gf.clear();
  k.gg.clear();
  k.go.clear();
  for (int t = 0; t < cfg.series_length; ++t) {
    MatrixXd a = p.lstm_wx * b.series.row(t) + p.lstm_wh * k.h.back();
    a.colwise() += p.lstm_b.col(0);
    ArrayXXd i = sigmoid(a.topRows(units).array());
    ArrayXXd f = sigmoid(a.middleRows(units, units).array());
    ArrayXXd g = a.middleRows(2 * units, units).array().tanh();
    ArrayXXd o = sigmoid(a.bottomRows(units).array());
    ArrayXXd c = f * k.c.back().array() + i * g;
    k.h.push_back((o * c.tanh()).matrix());
    k.c.push_back(c.matrix());
    k.gi.push_back(i.matrix());
    k.gf.push_back(f.matrix());
    k.gg.push_back(g.matrix());
    k.go.push_back(o.matrix());
  }
  k.h_out = k.h.back();

  k.context_in = cfg.ablate_context ? MatrixXd::Zero(b.context.rows(), n) : b.context;
  k.zc = (p.context_w * k.context_in).colwise() + p.context_b.col(0);
  k.r = k.zc.cwiseMax(0.0);

  if (k.dropout) {
    k.mask_q = dropout_mask(k.q.rows(), n, cfg.dropout_rate, *rng);
    k.mask_h = dropout_mask(k.h_out.rows(), n, cfg.dropout_rate, *rng);
    k.mask_r = dropout_mask(k.r.rows(), n, cfg.dropout_rate, *rng);
    k.q = k.q.cwiseProduct(k.mask_q);
    k.h_out = k.h_out.cwiseProduct(k.mask_h);
    k.r = k.r.cwiseProduct(k.mask_r);
  }

  k.merged.resize(k.q.rows() + k.h_out.rows() + k.r.rows(), n);
  k.merged << k.q, k.h_out, k.r;
  k.zm = (p.merge_w * k.merged).colwise() + p.merge_b.col(0);
  k.hidden = k.zm.cwiseMax(0.0);
  RowVectorXd scores = p.out_w * k.hidden;
  scores.array() += p.out_b(0, 0);
  return scores;
}

void backward(const ModelParams& p, const NetworkConfig& cfg, const FeatureBatch& b,
              const ForwardCache& k, const RowVectorXd& d_scores, GradientSet& g) {
  const int units = cfg.lstm_units;
  const auto relu_grad = [](const MatrixXd& z) {
    return (z.array() > 0.0).cast<double>().matrix();
  };

  g.out_w += d_scores * k.hidden.transpose();
  g.out_b(0, 0) += d_scores.sum();
  MatrixXd d_zm = (p.out_w.transpose() * d_scores).cwiseProduct(relu_grad(k.zm));
  g.merge_w += d_zm * k.merged.transpose();
  g.merge_b += d_zm.rowwise().sum();
  MatrixXd d_merged = p.merge_w.transpose() * d_zm;

  MatrixXd d_q = d_merged.topRows(cfg.query_units);
  MatrixXd d_h = d_merged.middleRows(cfg.query_units, units);
  MatrixXd d_r = d_merged.bottomRows(cfg.context_units);
  if (k.dropout) {
    d_q = d_q.cwiseProduct(k.mask_q);
    d_h = d_h.cwiseProduct(k.mask_h);
    d_r = d_r.cwiseProduct(k.mask_r);
  }

  MatrixXd d_zq = d_q.cwiseProduct(relu_grad(k.zq));
  g.query_w += d_zq * b.dense.transpose();
  g.query_b += d_zq.rowwise().sum();

  MatrixXd d_zc = d_r.cwiseProduct(relu_grad(k.zc));
  g.context_w += d_zc * k.context_in.transpose();
  g.context_b += d_zc.rowwise().sum();

  const auto n = d_h.cols();
  MatrixXd d_c = MatrixXd::Zero(units, n);
  MatrixXd d_a(4 * units, n);
  for (int t = cfg.series_length; t >= 1; --t) {
    const auto& i = k.gi[t - 1].array();
    const auto& f = k.gf[t - 1].array();
    const auto& gc = k.gg[t - 1].array();
    const auto& o = k.go[t - 1].array();
    const ArrayXXd tanh_c = k.c[t].array().tanh();
    const ArrayXXd d_o = d_h.array() * tanh_c;
    d_c.array() += d_h.array() * o * (1.0 - tanh_c.square());
    d_a.topRows(units) = (d_c.array() * gc * i * (1.0 - i)).matrix();
    d_a.middleRows(units, units) = (d_c.array() * k.c[t - 1].array() * f * (1.0 - f)).matrix();
    d_a.middleRows(2 * units, units) = (d_c.array() * i * (1.0 - gc.square())).matrix();
    d_a.bottomRows(units) = (d_o * o * (1.0 - o)).matrix();
    g.lstm_wx += d_a * b.series.row(t - 1).transpose();
    g.lstm_wh += d_a * k.h[t - 1].transpose();
    g.lstm_b += d_a.rowwise().sum();
    d_h = p.lstm_wh.transpose() * d_a;
    d_c = d_c.cwiseProduct(k.gf[t - 1]);
  }
}

}  // namespace

RowVectorXd forward_scores(const ModelParams& params, const NetworkConfig& cfg,
                           const FeatureBatch& batch, bool training, Rng* rng) {
  ForwardCache cache;
  return forward(params, cfg, batch, training, rng, cache);
}

double forward_score(const ModelParams& params, const NetworkConfig& cfg,
                     const FeatureVector& features, bool training, Rng* rng) {
  const FeatureVector* row = &features;
  const auto batch = FeatureBatch::from(std::span(&row, 1), cfg);
  return forward_scores(params, cfg, batch, training, rng)(0);
}

// ---- loss ------------------------------------------------------------------

double pair_probability(double f_p, double f_n) {
  const double d = f_p - f_n;
  if (d >= 0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

double delta_ndcg(int rank_p, int rank_n) {
  if (rank_p < 1 || rank_n < 1) throw std::invalid_argument("ranks must be >= 1");
  if (rank_p == rank_n) throw std::invalid_argument("degenerate pair");
  return std::abs(1.0 / std::log2(rank_p + 1.0) - 1.0 / std::log2(rank_n + 1.0));
}

namespace {

double pair_scale(int rank_p, int rank_n, double weight, const LossConfig& cfg) {
  return (cfg.use_delta_ndcg ? delta_ndcg(rank_p, rank_n) : 1.0) * weight;
}

}  // namespace

double pair_loss(double f_p, double f_n, int rank_p, int rank_n, double weight,
                 const LossConfig& cfg) {
  const double scale = pair_scale(rank_p, rank_n, weight, cfg);
  if (scale == 0.0) return 0.0;
  // −log σ(f_p − f_n) = log(1 + e^{−(f_p − f_n)})
  return logistic_loss(f_p - f_n) * scale;
}

namespace {

FeatureBatch stack_pairs(std::span<const PairExample> batch, const NetworkConfig& cfg) {
  std::vector<const FeatureVector*> rows;
  rows.reserve(batch.size() * 2);
  for (const auto& p : batch) rows.push_back(&p.positive);
  for (const auto& p : batch) rows.push_back(&p.negative);
  return FeatureBatch::from(rows, cfg);
}

}  // namespace

LossAndGradient loss_and_gradient(const ModelParams& params, const NetworkConfig& cfg,
                                  std::span<const PairExample> batch,
                                  const LossConfig& loss_cfg, bool training, Rng* rng) {
  LossAndGradient out{0.0, ModelParams::zeros(cfg)};
  if (batch.empty()) return out;
  const auto features = stack_pairs(batch, cfg);
  ForwardCache cache;
  const RowVectorXd scores = forward(params, cfg, features, training, rng, cache);

  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv = 1.0 / static_cast<double>(n);
  RowVectorXd d_scores(2 * n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& pr = batch[static_cast<std::size_t>(j)];
    const double scale = pair_scale(pr.rank_p, pr.rank_n, pr.weight, loss_cfg);
    const double diff = scores(j) - scores(n + j);
    total += scale == 0.0 ? 0.0 : logistic_loss(diff) * scale;
    // ∂L/∂f_p = −σ(f_n − f_p)·Δ·w/|S|
    const double g = logistic_loss_grad(diff) * scale * inv;
    d_scores(j) = g;
    d_scores(n + j) = -g;
  }
  out.loss = total * inv;
  backward(params, cfg, features, cache, d_scores, out.gradient);
  return out;
}

double batch_loss(const ModelParams& params, const NetworkConfig& cfg,
                  std::span<const PairExample> batch, const LossConfig& loss_cfg) {
  if (batch.empty()) return 0.0;
  const auto features = stack_pairs(batch, cfg);
  const RowVectorXd scores = forward_scores(params, cfg, features, false, nullptr);
  const auto n = static_cast<Eigen::Index>(batch.size());
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& pr = batch[static_cast<std::size_t>(j)];
    total += pair_loss(scores(j), scores(n + j), pr.rank_p, pr.rank_n, pr.weight, loss_cfg);
  }
  return total / static_cast<double>(n);
}

// ---- Adam ------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(const NetworkConfig& cfg, AdamSettings settings)
    : s_(settings), m_(ModelParams::zeros(cfg)), v_(ModelParams::zeros(cfg)) {}

void AdamOptimizer::step(ModelParams& params, const GradientSet& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
  std::vector<MatrixXd*> ps, ms, vs;
  std::vector<const MatrixXd*> gs;
  params.for_each([&](std::string_view, MatrixXd& m) { ps.push_back(&m); });
  m_.for_each([&](std::string_view, MatrixXd& m) { ms.push_back(&m); });
  v_.for_each([&](std::string_view, MatrixXd& m) { vs.push_back(&m); });
  grad.for_each([&](std::string_view, const MatrixXd& m) { gs.push_back(&m); });
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto m = ms[i]->array();
    auto v = vs[i]->array();
    const auto g = gs[i]->array();
    m = s_.beta1 * m + (1.0 - s_.beta1) * g;
    v = s_.beta2 * v + (1.0 - s_.beta2) * g.square();
    ps[i]->array() -= s_.learning_rate * (m / c1) / ((v / c2).sqrt() + s_.epsilon);
  }
}

// ---- training loop ---------------------------------------------------------

TrainResult train_ranker(std::span<const PairExample> train,
                         std::span<const PairExample> validation,
                         const NetworkConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (train.empty()) throw TrainingError("empty training set");
  if (options.epochs <= 0 || options.batch_size <= 0) {
    throw std::invalid_argument("epochs and batch size must be positive");
  }
  const LossConfig loss_cfg{!cfg.ablate_delta_ndcg};

  Rng init_rng(cfg.seed);
  Rng rng(options.seed);
  TrainResult result;
  ModelParams params = ModelParams::initialize(cfg, init_rng);
  AdamOptimizer adam(cfg, options.adam);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<PairExample> batch;
  batch.reserve(static_cast<std::size_t>(options.batch_size));
  double best_val = std::numeric_limits<double>::infinity();
  double last_finite = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size), ++batch_id) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      auto lg = loss_and_gradient(params, cfg, batch, loss_cfg, true, &rng);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_id) +
                            "; last finite loss " + std::to_string(last_finite));
      }
      last_finite = lg.loss;
      epoch_total += lg.loss * static_cast<double>(batch.size());
      adam.step(params, lg.gradient);
    }
    const double train_loss = epoch_total / static_cast<double>(train.size());
    result.train_loss.push_back(train_loss);

    double val_loss = std::numeric_limits<double>::quiet_NaN();
    if (!validation.empty()) {
      val_loss = 0.0;
      for (std::size_t start = 0; start < validation.size(); start += 1024) {
        const auto len = std::min<std::size_t>(1024, validation.size() - start);
        val_loss += batch_loss(params, cfg, validation.subspan(start, len), loss_cfg) *
                    static_cast<double>(len);
      }
      val_loss /= static_cast<double>(validation.size());
      result.validation_loss.push_back(val_loss);
      if (val_loss < best_val) {
        best_val = val_loss;
        result.best_epoch = epoch;
        result.params = params;
      }
    }
    if (options.on_epoch) options.on_epoch(epoch, train_loss, val_loss);
  }
  if (validation.empty() || result.best_epoch == 0) {
    result.best_epoch = options.epochs;
    result.params = params;
  }
  return result;
}

// ---- inference -------------------------------------------------------------

RankedList score_candidates(const ModelParams& params, const NetworkConfig& cfg,
                            const std::vector<CandidateFeatures>& candidates) {
  struct Row {
    const CandidateFeatures* c;
    double score;
  };
  std::vector<Row> rows;
  rows.reserve(candidates.size());
  // One forward pass per candidate: a candidate's score must not depend on
  // where it sits in a batch.
  for (const auto& c : candidates) {
    rows.push_back({&c, forward_score(params, cfg, c.features)});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.score != b.score) return a.score > b.score;
    const double pa = a.c->features.dense[kDensePopularity];
    const double pb = b.c->features.dense[kDensePopularity];
    if (pa != pb) return pa > pb;
    return a.c->query < b.c->query;
  });
  RankedList out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.c->query, r.score});
  return out;
}

}  // namespace acrank
