#include "gpgs/gp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include <Eigen/Cholesky>

#include "gpgs/error.hpp"
#include "gpgs/rng.hpp"

namespace gpgs {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// K must already carry the noise variance on its diagonal. Returns the
// jitter that made the factorisation succeed.
double factorize_into(const Eigen::MatrixXd& K, double jitter, Eigen::LLT<Eigen::MatrixXd>& llt,
                      Eigen::MatrixXd& scratch) {
  double j = jitter;
  for (;;) {
    scratch = K;
    scratch.diagonal().array() += j;
    llt.compute(scratch);
    if (llt.info() == Eigen::Success) {
      const auto diag = llt.matrixLLT().diagonal();
      if ((diag.array() > 0.0).all() && diag.allFinite()) return j;
    }
    if (j >= kMaxJitter)
      throw Error(ErrorKind::NotPositiveDefinite,
                  "Cholesky failed with jitter escalated to " + std::to_string(j));
    j = j <= 0.0 ? 1e-10 : std::min(j * 10.0, kMaxJitter);
  }
}

Factor factorize(const Eigen::MatrixXd& K, double jitter) {
  Factor f;
  Eigen::MatrixXd scratch;
  f.jitter = factorize_into(K, jitter, f.llt, scratch);
  return f;
}

// In-place inverse of a lower-triangular matrix by recursive 2x2 blocking.
void invert_lower(Eigen::Ref<Eigen::MatrixXd> L) {
  const Eigen::Index n = L.rows();
  if (n <= 48) {
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(inv);
    L = inv.triangularView<Eigen::Lower>();
    return;
  }
  const Eigen::Index h = n / 2;
  auto a = L.topLeftCorner(h, h);
  auto b = L.bottomLeftCorner(n - h, h);
  auto c = L.bottomRightCorner(n - h, n - h);
  invert_lower(a);
  invert_lower(c);
  const Eigen::MatrixXd ba = b * a.triangularView<Eigen::Lower>();
  b.noalias() = -(c.triangularView<Eigen::Lower>() * ba);
}

double l2_penalty(const KernelConfig& cfg, double l2_weight) { return l2_weight * cfg.log_params().squaredNorm(); }

double loss_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                        const KernelConfig& cfg, double l2_weight) {
  const double n = static_cast<double>(y.size());
  const double log_det_half = llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * y.dot(alpha) + log_det_half + n * kHalfLog2Pi + l2_penalty(cfg, l2_weight);
}

// Buffers reused across the iterations of one output.
struct Workspace {
  Eigen::MatrixXd kf;
  Eigen::MatrixXd dkl;
  Eigen::MatrixXd k;
  Eigen::MatrixXd scratch;
  Eigen::MatrixXd linv;
  Eigen::MatrixXd prod;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

// `dist` holds pairwise input distances, which stay fixed while the
// parameters move.
//   dL/dtheta_j = 1/2 tr((K^-1 - alpha alpha^T) dK/dtheta_j) + 2 l2 theta_j
// with tr(K^-1) = |L^-1|_F^2 and tr(K^-1 S) = sum(L^-1 .* (L^-1 S)).
NllTerms evaluate(const KernelConfig& cfg, const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, double l2_weight,
                  double jitter, bool with_gradient, Workspace& ws) {
  const Eigen::Index n = dist.rows();
  if (y.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "target vector length does not match the number of inputs");
  const double noise = cfg.noise_var();

  kernel_from_distances(cfg, dist, ws.kf, with_gradient ? &ws.dkl : nullptr);
  ws.k = ws.kf;
  ws.k.diagonal().array() += noise;
  const double used_jitter = factorize_into(ws.k, jitter, ws.llt, ws.scratch);
  const Eigen::VectorXd alpha = ws.llt.solve(y);

  NllTerms out;
  out.jitter = used_jitter;
  out.loss = loss_from_factor(ws.llt, y, alpha, cfg, l2_weight);
  if (!with_gradient) return out;

  ws.linv = ws.llt.matrixL();
  invert_lower(ws.linv);
  const double tr_kinv = ws.linv.squaredNorm();
  const double c = noise + used_jitter;
  const double alpha_sq = alpha.squaredNorm();
  const double y_alpha = y.dot(alpha);

  ws.prod.noalias() = ws.linv.triangularView<Eigen::Lower>() * ws.dkl;
  const double tr_kinv_dkl = (ws.linv.array() * ws.prod.array()).sum();
  const double alpha_dkl_alpha = alpha.dot(ws.dkl * alpha);

  out.gradient[0] = 0.5 * ((static_cast<double>(n) - c * tr_kinv) - (y_alpha - c * alpha_sq));
  out.gradient[1] = 0.5 * (tr_kinv_dkl - alpha_dkl_alpha);
  out.gradient[2] = 0.5 * noise * (tr_kinv - alpha_sq);
  out.gradient += 2.0 * l2_weight * cfg.log_params();
  return out;
}

NllTerms evaluate(const KernelConfig& cfg, const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, double l2_weight,
                  double jitter, bool with_gradient) {
  Workspace ws;
  return evaluate(cfg, dist, y, l2_weight, jitter, with_gradient, ws);
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (cap == 0 || n <= cap) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw Error(ErrorKind::InvalidArgument, "iterations must be at least 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (!(l2_weight >= 0.0)) throw Error(ErrorKind::InvalidArgument, "l2 weight must be non-negative");
  if (!(jitter >= 0.0)) throw Error(ErrorKind::InvalidArgument, "jitter must be non-negative");
}

OutputNormalizer OutputNormalizer::fit(const Eigen::MatrixXd& targets) {
  OutputNormalizer norm;
  const double n = static_cast<double>(targets.rows());
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto col = targets.col(static_cast<Eigen::Index>(o));
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    norm.mean[o] = mean;
    norm.stddev[o] = std::max(std::sqrt(var), 1e-12);
  }
  return norm;
}

Eigen::MatrixXd OutputNormalizer::normalize(const Eigen::MatrixXd& targets) const {
  Eigen::MatrixXd out(targets.rows(), targets.cols());
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto c = static_cast<Eigen::Index>(o);
    out.col(c) = (targets.col(c).array() - mean[o]) / stddev[o];
  }
  return out;
}

Eigen::MatrixXd OutputNormalizer::denormalize(const Eigen::MatrixXd& values) const {
  Eigen::MatrixXd out(values.rows(), values.cols());
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto c = static_cast<Eigen::Index>(o);
    out.col(c) = values.col(c).array() * stddev[o] + mean[o];
  }
  return out;
}

double nll(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double l2_weight,
           double jitter) {
  cfg.validate();
  return evaluate(cfg, pairwise_distances(X), y, l2_weight, jitter, false).loss;
}

Eigen::Vector3d nll_gradient(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double l2_weight, double jitter) {
  return nll_with_gradient(cfg, X, y, l2_weight, jitter).gradient;
}

NllTerms nll_with_gradient(const KernelConfig& cfg, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double l2_weight, double jitter) {
  cfg.validate();
  return evaluate(cfg, pairwise_distances(X), y, l2_weight, jitter, true);
}

TrainedGP TrainedGP::condition(Eigen::MatrixXd inputs, Eigen::MatrixXd normalized_targets,
                               OutputNormalizer normalizer, const std::array<KernelConfig, kOutputCount>& kernels,
                               const std::array<double, kOutputCount>& jitters) {
  if (inputs.rows() == 0) throw Error(ErrorKind::EmptyDataset, "no training inputs");
  if (normalized_targets.rows() != inputs.rows() ||
      normalized_targets.cols() != static_cast<Eigen::Index>(kOutputCount))
    throw Error(ErrorKind::DimensionMismatch, "targets must be n x 6 for n training inputs");

  TrainedGP gp;
  gp.inputs_ = std::move(inputs);
  gp.targets_ = std::move(normalized_targets);
  gp.normalizer_ = normalizer;
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    kernels[o].validate();
    auto& out = gp.outputs_[o];
    out.kernel = kernels[o];
    const Factor f = factorize(gram_matrix(kernels[o], gp.inputs_, 0.0), jitters[o]);
    out.jitter = f.jitter;
    out.chol = f.llt.matrixL();
    out.alpha = f.llt.solve(gp.targets_.col(static_cast<Eigen::Index>(o)));
  }
  return gp;
}

PosteriorBatch TrainedGP::posterior(const Eigen::MatrixXd& queries) const {
  if (queries.cols() != inputs_.cols())
    throw Error(ErrorKind::DimensionMismatch, "query dimension " + std::to_string(queries.cols()) +
                                                  " does not match training dimension " +
                                                  std::to_string(inputs_.cols()));
  const Eigen::Index m = queries.rows();
  PosteriorBatch batch;
  batch.mean_normalized.resize(m, kOutputCount);
  batch.variance_normalized.resize(m, kOutputCount);
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto c = static_cast<Eigen::Index>(o);
    const auto& out = outputs_[o];
    const Eigen::MatrixXd Ks = cross_kernel(out.kernel, inputs_, queries);  // n x m
    batch.mean_normalized.col(c).noalias() = Ks.transpose() * out.alpha;
    const Eigen::MatrixXd V = out.chol.triangularView<Eigen::Lower>().solve(Ks);
    batch.variance_normalized.col(c) =
        (out.kernel.signal_var() - V.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);
  }
  batch.mean = normalizer_.denormalize(batch.mean_normalized);
  batch.variance.resize(m, kOutputCount);
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto c = static_cast<Eigen::Index>(o);
    batch.variance.col(c) = batch.variance_normalized.col(c) * (normalizer_.stddev[o] * normalizer_.stddev[o]);
  }
  return batch;
}

Eigen::MatrixXd input_matrix(std::span<const PixelSample> samples) {
  const bool depth = !samples.empty() && samples.front().depth.has_value();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), depth ? 3 : 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.depth.has_value() != depth)
      throw Error(ErrorKind::DimensionMismatch, "samples mix inputs with and without depth");
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = s.u_norm;
    X(r, 1) = s.v_norm;
    if (depth) X(r, 2) = *s.depth;
  }
  return X;
}

Eigen::MatrixXd input_matrix(const PixelToPointDataset& ds) {
  std::vector<PixelSample> inputs;
  inputs.reserve(ds.size());
  for (const auto& s : ds.samples) inputs.push_back(s.input);
  return input_matrix(inputs);
}

Eigen::MatrixXd target_matrix(const PixelToPointDataset& ds) {
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(ds.size()), kOutputCount);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t o = 0; o < kOutputCount; ++o)
      Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) = ds.samples[i].target[o];
  return Y;
}

TrainedGP train_gp(const PixelToPointDataset& ds, const KernelConfig& kernel_template, const TrainConfig& cfg) {
  cfg.validate();
  kernel_template.validate();
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "cannot train on an empty dataset");

  const auto keep = subsample_indices(ds.size(), cfg.max_train_points, cfg.seed);
  PixelToPointDataset used{ds.image_id, ds.width, ds.height, {}};
  used.samples.reserve(keep.size());
  for (auto i : keep) used.samples.push_back(ds.samples[i]);

  const Eigen::MatrixXd X = input_matrix(used);
  const OutputNormalizer normalizer = OutputNormalizer::fit(target_matrix(used));
  const Eigen::MatrixXd Y = normalizer.normalize(target_matrix(used));
  const Eigen::MatrixXd dist = pairwise_distances(X);

  // Gradient steps act on the per-sample objective L / n; the loss curve
  // records L itself.
  const double step = cfg.learning_rate / static_cast<double>(X.rows());
  const double min_log_noise = std::log(kMinNoiseVar);

  std::array<KernelConfig, kOutputCount> kernels;
  std::array<double, kOutputCount> jitters{};
  std::array<std::vector<double>, kOutputCount> curves;
  std::array<double, kOutputCount> final_losses{};
  std::array<std::exception_ptr, kOutputCount> failures;

  auto fit_output = [&](std::size_t o) {
    try {
      const Eigen::VectorXd y = Y.col(static_cast<Eigen::Index>(o));
      KernelConfig k = kernel_template;
      auto& curve = curves[o];
      curve.reserve(static_cast<std::size_t>(cfg.iterations));
      Workspace ws;
      for (int t = 0; t < cfg.iterations; ++t) {
        const NllTerms terms = evaluate(k, dist, y, cfg.l2_weight, cfg.jitter, true, ws);
        curve.push_back(terms.loss);
        Eigen::Vector3d theta = k.log_params() - step * terms.gradient;
        theta[2] = std::max(theta[2], min_log_noise);
        if (!theta.allFinite())
          throw Error(ErrorKind::NotPositiveDefinite, "hyperparameters diverged at iteration " + std::to_string(t));
        k.set_log_params(theta);
      }
      const NllTerms last = evaluate(k, dist, y, cfg.l2_weight, cfg.jitter, false, ws);
      kernels[o] = k;
      jitters[o] = last.jitter;
      final_losses[o] = last.loss;
    } catch (...) {
      failures[o] = std::current_exception();
    }
  };

  {
    const std::size_t worker_count =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, kOutputCount);
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < worker_count; ++w)
      workers.emplace_back([&] {
        for (std::size_t o = next++; o < kOutputCount; o = next++) fit_output(o);
      });
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  TrainedGP gp = TrainedGP::condition(X, Y, normalizer, kernels, jitters);
  gp.image_id = ds.image_id;
  gp.width = ds.width;
  gp.height = ds.height;
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    auto& out = gp.output(o);
    out.loss_curve = std::move(curves[o]);
    out.initial_loss = out.loss_curve.front();
    out.final_loss = final_losses[o];
  }
  return gp;
}

}  // namespace gpgs
