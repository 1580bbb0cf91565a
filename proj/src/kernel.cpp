#include "gpgs/kernel.hpp"

#include "gpgs/error.hpp"

namespace gpgs {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

enum class Form { Matern12, Matern32, Matern52, RBF };

Form form_of(const KernelConfig& cfg) {
  if (cfg.family == KernelFamily::RBF) return Form::RBF;
  if (cfg.nu == 0.5) return Form::Matern12;
  if (cfg.nu == 1.5) return Form::Matern32;
  if (cfg.nu == 2.5) return Form::Matern52;
  throw Error(ErrorKind::InvalidArgument, "unsupported Matern nu " + std::to_string(cfg.nu));
}

}  // namespace

std::string_view to_string(KernelFamily family) { return family == KernelFamily::RBF ? "rbf" : "matern"; }

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "matern" || name == "Matern") return KernelFamily::Matern;
  if (name == "rbf" || name == "RBF") return KernelFamily::RBF;
  throw Error(ErrorKind::InvalidArgument, "unknown kernel family '" + std::string(name) + "'");
}

void KernelConfig::validate() const {
  form_of(*this);
  for (double p : {log_signal_var, log_lengthscale, log_noise_var}) {
    const double e = std::exp(p);
    if (!std::isfinite(p) || !std::isfinite(e) || e <= 0.0)
      throw Error(ErrorKind::InvalidArgument, "kernel parameter out of range");
  }
}

double kernel_at_distance(const KernelConfig& cfg, double r) {
  const double s = cfg.signal_var();
  const double t = r / cfg.lengthscale();
  switch (form_of(cfg)) {
    case Form::Matern12: return s * std::exp(-t);
    case Form::Matern32: return s * (1.0 + kSqrt3 * t) * std::exp(-kSqrt3 * t);
    case Form::Matern52: return s * (1.0 + kSqrt5 * t + 5.0 * t * t / 3.0) * std::exp(-kSqrt5 * t);
    case Form::RBF: return s * std::exp(-0.5 * t * t);
  }
  return 0.0;
}

// dk/dlog(l) = -t dk/dt
double kernel_lengthscale_derivative(const KernelConfig& cfg, double r) {
  const double s = cfg.signal_var();
  const double t = r / cfg.lengthscale();
  switch (form_of(cfg)) {
    case Form::Matern12: return s * t * std::exp(-t);
    case Form::Matern32: return 3.0 * s * t * t * std::exp(-kSqrt3 * t);
    case Form::Matern52: return (5.0 / 3.0) * s * t * t * (1.0 + kSqrt5 * t) * std::exp(-kSqrt5 * t);
    case Form::RBF: return s * t * t * std::exp(-0.5 * t * t);
  }
  return 0.0;
}

void kernel_from_distances(const KernelConfig& cfg, const Eigen::MatrixXd& dist, Eigen::MatrixXd& k,
                           Eigen::MatrixXd* dk_dlog_lengthscale) {
  const double s = cfg.signal_var();
  const auto t = dist.array() / cfg.lengthscale();
  k.resize(dist.rows(), dist.cols());
  Eigen::MatrixXd* dk = dk_dlog_lengthscale;
  if (dk) dk->resize(dist.rows(), dist.cols());
  switch (form_of(cfg)) {
    case Form::Matern12:
      k.array() = s * (-t).exp();
      if (dk) dk->array() = t * k.array();
      break;
    case Form::Matern32: {
      const Eigen::ArrayXXd e = s * (-kSqrt3 * t).exp();
      k.array() = (1.0 + kSqrt3 * t) * e;
      if (dk) dk->array() = 3.0 * t.square() * e;
      break;
    }
    case Form::Matern52: {
      const Eigen::ArrayXXd e = s * (-kSqrt5 * t).exp();
      k.array() = (1.0 + kSqrt5 * t + (5.0 / 3.0) * t.square()) * e;
      if (dk) dk->array() = (5.0 / 3.0) * t.square() * (1.0 + kSqrt5 * t) * e;
      break;
    }
    case Form::RBF:
      k.array() = s * (-0.5 * t.square()).exp();
      if (dk) dk->array() = t.square() * k.array();
      break;
  }
}

double kernel_value(const KernelConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::DimensionMismatch,
                "kernel inputs of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  return kernel_at_distance(cfg, (a - b).norm());
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r = (X.row(i) - X.row(j)).norm();
      d(i, j) = r;
      d(j, i) = r;
    }
  }
  return d;
}

Eigen::MatrixXd gram_matrix(const KernelConfig& cfg, const Eigen::MatrixXd& X, double jitter) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  const double diag = cfg.signal_var() + cfg.noise_var() + jitter;
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double k = kernel_at_distance(cfg, (X.row(i) - X.row(j)).norm());
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

Eigen::MatrixXd cross_kernel(const KernelConfig& cfg, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols())
    throw Error(ErrorKind::DimensionMismatch,
                "inputs of dimension " + std::to_string(A.cols()) + " and " + std::to_string(B.cols()));
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) K(i, j) = kernel_at_distance(cfg, (A.row(i) - B.row(j)).norm());
  return K;
}

}  // namespace gpgs
