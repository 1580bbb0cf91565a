#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace gpgs {

enum class KernelFamily { Matern, RBF };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary covariance in log-parameter space. nu is only read for the
/// Matern family and must be 0.5, 1.5 or 2.5.
struct KernelConfig {
  KernelFamily family = KernelFamily::Matern;
  double nu = 0.5;
  double log_signal_var = 0.0;
  double log_lengthscale = std::log(0.1);
  double log_noise_var = std::log(1e-4);

  double signal_var() const { return std::exp(log_signal_var); }
  double lengthscale() const { return std::exp(log_lengthscale); }
  double noise_var() const { return std::exp(log_noise_var); }

  Eigen::Vector3d log_params() const { return {log_signal_var, log_lengthscale, log_noise_var}; }
  void set_log_params(const Eigen::Vector3d& theta) {
    log_signal_var = theta[0];
    log_lengthscale = theta[1];
    log_noise_var = theta[2];
  }

  /// Throws InvalidArgument on an unsupported nu or a non-finite parameter.
  void validate() const;
};

/// Covariance at distance r = |a - b|, noise excluded.
///   Matern-1/2: s e^{-t}
///   Matern-3/2: s (1 + sqrt3 t) e^{-sqrt3 t}
///   Matern-5/2: s (1 + sqrt5 t + 5t^2/3) e^{-sqrt5 t}
///   RBF:        s e^{-t^2/2}
/// with t = r / lengthscale and s the signal variance.
double kernel_at_distance(const KernelConfig& cfg, double r);

/// d k / d log(lengthscale) at distance r.
double kernel_lengthscale_derivative(const KernelConfig& cfg, double r);

/// Elementwise covariance of a distance matrix, and optionally its
/// derivative with respect to log(lengthscale).
void kernel_from_distances(const KernelConfig& cfg, const Eigen::MatrixXd& dist, Eigen::MatrixXd& k,
                           Eigen::MatrixXd* dk_dlog_lengthscale = nullptr);

/// Throws DimensionMismatch when a and b differ in length.
double kernel_value(const KernelConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b);

/// Rows of X are inputs. The diagonal carries noise_var + jitter.
Eigen::MatrixXd gram_matrix(const KernelConfig& cfg, const Eigen::MatrixXd& X, double jitter);

/// k(A_i, B_j) for rows of A and B, noise excluded.
Eigen::MatrixXd cross_kernel(const KernelConfig& cfg, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Pairwise Euclidean distances between rows of X.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X);

}  // namespace gpgs
