#pragma once

// Test-only reference computations. Nothing here calls into the library's
// numerical paths.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gpgs/kernel.hpp"
#include "gpgs/metrics.hpp"

namespace gpgs::oracle {

/// Matern covariance evaluated from the general Gamma/Bessel form at
/// scaled distance t = r / lengthscale.
inline double matern_bessel(double nu, double signal_var, double t) {
  if (t == 0.0) return signal_var;
  const double z = std::sqrt(2.0 * nu) * t;
  return signal_var * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * std::cyl_bessel_k(nu, z);
}

/// Covariance straight from the textbook forms, written independently.
inline double covariance(const KernelConfig& cfg, double r) {
  const double s = std::exp(cfg.log_signal_var);
  const double t = r / std::exp(cfg.log_lengthscale);
  if (cfg.family == KernelFamily::RBF) return s * std::exp(-t * t / 2.0);
  return matern_bessel(cfg.nu, s, t);
}

inline double covariance(const KernelConfig& cfg, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return covariance(cfg, std::sqrt(sq));
}

inline Eigen::MatrixXd dense_gram(const KernelConfig& cfg, const Eigen::MatrixXd& X, double jitter) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K(i, j) = covariance(cfg, Eigen::VectorXd(X.row(i)), Eigen::VectorXd(X.row(j)));
  K.diagonal().array() += std::exp(cfg.log_noise_var) + jitter;
  return K;
}

/// NLL via LU: log|K| from the LU diagonal and K^-1 y from a general solve.
inline double nll_lu(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l2,
                     double jitter) {
  const Eigen::MatrixXd K = dense_gram(cfg, X, jitter);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd a = lu.solve(y);
  const double log_det = lu.matrixLU().diagonal().array().abs().log().sum();
  const Eigen::Vector3d theta(cfg.log_signal_var, cfg.log_lengthscale, cfg.log_noise_var);
  return 0.5 * y.dot(a) + 0.5 * log_det + 0.5 * static_cast<double>(y.size()) * std::log(2.0 * M_PI) +
         l2 * theta.squaredNorm();
}

struct DensePosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Explicit dense solve of (K + noise I) alpha = y, then per-query dot
/// products.
inline DensePosterior posterior_dense(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& Q, double jitter) {
  const Eigen::MatrixXd K = dense_gram(cfg, X, jitter);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd alpha = lu.solve(y);
  DensePosterior out{Eigen::VectorXd(Q.rows()), Eigen::VectorXd(Q.rows())};
  for (Eigen::Index q = 0; q < Q.rows(); ++q) {
    Eigen::VectorXd ks(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      ks[i] = covariance(cfg, Eigen::VectorXd(X.row(i)), Eigen::VectorXd(Q.row(q)));
    out.mean[q] = ks.dot(alpha);
    out.variance[q] = std::exp(cfg.log_signal_var) - ks.dot(lu.solve(ks));
  }
  return out;
}

/// Double-loop Chamfer distance.
inline double chamfer(std::span<const Point3> P, std::span<const Point3> G) {
  auto one_way = [](std::span<const Point3> A, std::span<const Point3> B) {
    double sum = 0.0;
    for (const auto& a : A) {
      double best = INFINITY;
      for (const auto& b : B)
        best = std::min(best, std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                        (a[2] - b[2]) * (a[2] - b[2])));
      sum += best;
    }
    return sum / static_cast<double>(A.size());
  };
  return one_way(P, G) + one_way(G, P);
}

/// Central finite differences in log-parameter space.
template <typename Loss>
Eigen::Vector3d finite_difference_gradient(const KernelConfig& cfg, Loss loss, double step = 1e-5) {
  Eigen::Vector3d g;
  for (int j = 0; j < 3; ++j) {
    KernelConfig plus = cfg, minus = cfg;
    Eigen::Vector3d tp = cfg.log_params(), tm = cfg.log_params();
    tp[j] += step;
    tm[j] -= step;
    plus.set_log_params(tp);
    minus.set_log_params(tm);
    g[j] = (loss(plus) - loss(minus)) / (2.0 * step);
  }
  return g;
}

}  // namespace gpgs::oracle
