#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gpgs/dataset.hpp"
#include "gpgs/kernel.hpp"

namespace gpgs {

inline constexpr double kMinNoiseVar = 1e-10;
inline constexpr double kMaxJitter = 1e-2;

struct TrainConfig {
  int iterations = 1000;
  double learning_rate = 0.01;
  double l2_weight = 1e-6;
  double jitter = 1e-8;
  std::size_t max_train_points = 2000;  // 0 = unlimited
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-output affine standardisation; the mean doubles as the constant GP
/// prior mean of that output.
struct OutputNormalizer {
  std::array<double, kOutputCount> mean{};
  std::array<double, kOutputCount> stddev{1, 1, 1, 1, 1, 1};

  static OutputNormalizer fit(const Eigen::MatrixXd& targets);
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& targets) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& values) const;
};

/// Regularised negative log marginal likelihood
///   L = 1/2 y^T K^-1 y + 1/2 log|K| + n/2 log 2pi + l2 |theta|^2
/// and its gradient in log-parameter space. `jitter` reports the diagonal
/// stabiliser that was actually needed.
struct NllTerms {
  double loss = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  double jitter = 0.0;
};

double nll(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l2_weight,
           double jitter = 1e-8);
Eigen::Vector3d nll_gradient(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double l2_weight, double jitter = 1e-8);
NllTerms nll_with_gradient(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double l2_weight, double jitter = 1e-8);

/// Posterior over m queries. Normalised variances are clamped at zero.
struct PosteriorBatch {
  Eigen::MatrixXd mean_normalized;      // m x 6
  Eigen::MatrixXd mean;                 // m x 6, original units
  Eigen::MatrixXd variance_normalized;  // m x 6
  Eigen::MatrixXd variance;             // m x 6, scaled by stddev^2
};

/// State of one output after conditioning on the training data.
struct OutputModel {
  KernelConfig kernel;
  double jitter = 0.0;      // diagonal stabiliser used for the cached factor
  Eigen::MatrixXd chol;     // lower Cholesky factor of K + (noise + jitter) I
  Eigen::VectorXd alpha;    // (K + (noise + jitter) I)^-1 y
  std::vector<double> loss_curve;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Six independent single-output GPs sharing one set of training inputs.
class TrainedGP {
 public:
  /// Factorises each output's Gram matrix for fixed hyperparameters.
  /// Cholesky failure escalates the jitter tenfold up to 1e-2.
  static TrainedGP condition(Eigen::MatrixXd inputs, Eigen::MatrixXd normalized_targets, OutputNormalizer normalizer,
                             const std::array<KernelConfig, kOutputCount>& kernels,
                             const std::array<double, kOutputCount>& jitters);

  PosteriorBatch posterior(const Eigen::MatrixXd& queries) const;

  Eigen::Index input_dim() const { return inputs_.cols(); }
  Eigen::Index train_size() const { return inputs_.rows(); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& normalized_targets() const { return targets_; }
  const OutputNormalizer& normalizer() const { return normalizer_; }
  const OutputModel& output(std::size_t o) const { return outputs_[o]; }
  OutputModel& output(std::size_t o) { return outputs_[o]; }

  ImageId image_id = 0;
  int width = 0;
  int height = 0;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd targets_;
  OutputNormalizer normalizer_;
  std::array<OutputModel, kOutputCount> outputs_;
};

/// Input matrix (u, v[, depth]) for a set of samples. Throws
/// DimensionMismatch when some samples carry depth and others do not.
Eigen::MatrixXd input_matrix(std::span<const PixelSample> samples);
Eigen::MatrixXd input_matrix(const PixelToPointDataset& ds);
Eigen::MatrixXd target_matrix(const PixelToPointDataset& ds);

/// Standardises targets, then runs `iterations` gradient steps per output in
/// log-parameter space starting from `kernel_template`, and caches the final
/// factorisation. Datasets above max_train_points are subsampled (seeded).
TrainedGP train_gp(const PixelToPointDataset& ds, const KernelConfig& kernel_template, const TrainConfig& cfg);

/// Plain-text "gpgs-model v1" file with doubles written to 17 significant
/// digits. Loading re-runs the conditioning step.
void save_model(const TrainedGP& model, const std::filesystem::path& path);
TrainedGP load_model(const std::filesystem::path& path);

}  // namespace gpgs
