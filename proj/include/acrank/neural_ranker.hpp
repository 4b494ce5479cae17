#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "acrank/feature_pipeline.hpp"
#include "acrank/io.hpp"
#include "acrank/ranking.hpp"

namespace acrank {

class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetworkConfig {
  int dense_length = FeatureLayout::kDenseLength;
  int series_length = 7;
  int context_length = 6;  // full context block, K + 3
  int query_units = 128;
  int lstm_units = 16;
  int context_units = 128;
  int merge_units = 64;
  double dropout_rate = 0.1;
  std::uint64_t seed = 1;
  bool ablate_delta_ndcg = false;
  bool ablate_context = false;

  static NetworkConfig for_layout(const FeatureLayout& layout);
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// All weights of the scoring tower. The positive and negative branches of a
// pair are two evaluations of this single set of tensors.
//
//   query  = relu(query_w · dense + query_b)
//   h_T    = LSTM(series), gates stacked [input; forget; cell; output]
//   ctx    = relu(context_w · context + context_b)
//   hidden = relu(merge_w · [query; h_T; ctx] + merge_b)
//   f      = out_w · hidden + out_b
struct ModelParams {
  Eigen::MatrixXd query_w, query_b;
  Eigen::MatrixXd lstm_wx, lstm_wh, lstm_b;
  Eigen::MatrixXd context_w, context_b;
  Eigen::MatrixXd merge_w, merge_b;
  Eigen::MatrixXd out_w, out_b;

  static ModelParams zeros(const NetworkConfig& cfg);
  // Glorot-uniform weights, zero biases, forget-gate bias 1.
  static ModelParams initialize(const NetworkConfig& cfg, Rng& rng);

  template <typename F>
  void for_each(F&& f) {
    f("query.w", query_w);
    f("query.b", query_b);
    f("lstm.wx", lstm_wx);
    f("lstm.wh", lstm_wh);
    f("lstm.b", lstm_b);
    f("context.w", context_w);
    f("context.b", context_b);
    f("merge.w", merge_w);
    f("merge.b", merge_b);
    f("out.w", out_w);
    f("out.b", out_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](std::string_view name, Eigen::MatrixXd& m) { f(name, static_cast<const Eigen::MatrixXd&>(m)); });
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  bool operator==(const ModelParams& o) const;
};

using GradientSet = ModelParams;

// Column-major feature blocks, one column per example.
struct FeatureBatch {
  Eigen::MatrixXd dense;
  Eigen::MatrixXd series;
  Eigen::MatrixXd context;

  std::size_t size() const { return static_cast<std::size_t>(dense.cols()); }
  static FeatureBatch from(std::span<const FeatureVector* const> rows,
                           const NetworkConfig& cfg);
};

void check_layout(const FeatureVector& fv, const NetworkConfig& cfg);

// Row vector of scores. With training=true inverted dropout is applied to the
// three representation outputs using rng; otherwise rng is unused.
Eigen::RowVectorXd forward_scores(const ModelParams& params, const NetworkConfig& cfg,
                                  const FeatureBatch& batch, bool training, Rng* rng);

double forward_score(const ModelParams& params, const NetworkConfig& cfg,
                     const FeatureVector& features, bool training = false,
                     Rng* rng = nullptr);

// ---- pairwise loss ---------------------------------------------------------

// 1 / (1 + e^{-(f_p - f_n)}), overflow-safe.
double pair_probability(double f_p, double f_n);

// |1/log2(rank_p + 1) - 1/log2(rank_n + 1)|; throws on rank_p == rank_n.
double delta_ndcg(int rank_p, int rank_n);

struct LossConfig {
  bool use_delta_ndcg = true;
  static constexpr double kLogBase = 2.0;
};

double pair_loss(double f_p, double f_n, int rank_p, int rank_n, double weight,
                 const LossConfig& cfg);

struct PairExample {
  FeatureVector positive;
  FeatureVector negative;
  int rank_p = 1;
  int rank_n = 2;
  double weight = 1.0;
};

struct LossAndGradient {
  double loss = 0.0;  // mean pair loss over the batch
  GradientSet gradient;
};

// Exact gradient of the mean pair loss w.r.t. every parameter.
LossAndGradient loss_and_gradient(const ModelParams& params, const NetworkConfig& cfg,
                                  std::span<const PairExample> batch,
                                  const LossConfig& loss_cfg, bool training, Rng* rng);

double batch_loss(const ModelParams& params, const NetworkConfig& cfg,
                  std::span<const PairExample> batch, const LossConfig& loss_cfg);

// ---- training --------------------------------------------------------------

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const NetworkConfig& cfg, AdamSettings settings);
  void step(ModelParams& params, const GradientSet& grad);

 private:
  AdamSettings s_;
  ModelParams m_, v_;
  long t_ = 0;
};

struct TrainOptions {
  int epochs = 10;
  int batch_size = 256;
  AdamSettings adam;
  std::uint64_t seed = 1;
  // Called after each epoch with (epoch, train loss, validation loss or NaN).
  std::function<void(int, double, double)> on_epoch;
};

struct TrainResult {
  ModelParams params;  // best-validation epoch, or final epoch without validation
  int best_epoch = 0;  // 1-based
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};

TrainResult train_ranker(std::span<const PairExample> train,
                         std::span<const PairExample> validation,
                         const NetworkConfig& cfg, const TrainOptions& options);

// ---- inference -------------------------------------------------------------

struct CandidateFeatures {
  std::string query;
  FeatureVector features;
};

// Sorts by score descending, then popularity feature descending, then query.
RankedList score_candidates(const ModelParams& params, const NetworkConfig& cfg,
                            const std::vector<CandidateFeatures>& candidates);

}  // namespace acrank
