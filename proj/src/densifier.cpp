#include "gpgs/densifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "gpgs/error.hpp"
#include "gpgs/rng.hpp"

namespace gpgs {

void SamplingConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::InvalidArgument, "beta must lie in (0, 1)");
  if (angular_resolution < 1) throw Error(ErrorKind::InvalidArgument, "angular resolution must be at least 1");
}

void FilterConfig::validate() const {
  if (!(quantile > 0.0 && quantile <= 1.0)) throw Error(ErrorKind::InvalidArgument, "filter quantile must lie in (0, 1]");
}

std::vector<PixelSample> generate_samples(std::span<const PixelCoord> train_pixels, int width, int height,
                                          const SamplingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "image size must be positive");

  const double w = width;
  const double h = height;
  const double radius = cfg.beta * std::min(w, h);
  const int m = cfg.angular_resolution;
  Rng rng(seed);

  std::vector<PixelSample> out;
  out.reserve(train_pixels.size() * static_cast<std::size_t>(m));
  std::set<std::pair<double, double>> seen;
  for (const auto& p : train_pixels) {
    for (int j = 0; j < m; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / m;
      const double r = cfg.on_boundary ? radius : radius * (1.0 - rng.uniform());
      const double u = p.u + r * std::cos(theta);
      const double v = p.v + r * std::sin(theta);
      if (!(u >= 0.0 && u < w && v >= 0.0 && v < h)) continue;
      const PixelSample s{u / w, v / h, std::nullopt};
      if (!seen.emplace(s.u_norm, s.v_norm).second) continue;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<PixelCoord> dataset_pixels(const PixelToPointDataset& ds) {
  std::vector<PixelCoord> pixels;
  pixels.reserve(ds.size());
  for (const auto& s : ds.samples) pixels.push_back({s.input.u_norm * ds.width, s.input.v_norm * ds.height});
  return pixels;
}

std::vector<PixelSample> attach_depth(std::span<const PixelSample> candidates, const DepthMap& depth) {
  std::vector<PixelSample> out;
  out.reserve(candidates.size());
  for (auto s : candidates) {
    s.depth = depth.nearest(s.u_norm * depth.width, s.v_norm * depth.height);
    if (s.depth) out.push_back(s);
  }
  return out;
}

std::size_t PredictedPointSet::retained_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const PredictedPoint& p) { return p.retained; }));
}

PredictedPointSet infer_dense(const TrainedGP& model, std::span<const PixelSample> candidates) {
  PredictedPointSet preds;
  if (candidates.empty()) return preds;
  const Eigen::MatrixXd Q = input_matrix(candidates);
  const PosteriorBatch post = model.posterior(Q);
  preds.points.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& p = preds.points[i];
    const auto r = static_cast<Eigen::Index>(i);
    p.pixel = candidates[i];
    for (std::size_t o = 0; o < kOutputCount; ++o) {
      const auto c = static_cast<Eigen::Index>(o);
      p.mean[o] = post.mean(r, c);
      p.variance[o] = post.variance_normalized(r, c);
    }
    p.mean_rgb_var = (p.variance[kR] + p.variance[kG] + p.variance[kB]) / 3.0;
  }
  return preds;
}

std::size_t quantile_rank(double q, std::size_t n) {
  const double raw = std::ceil(q * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(raw < 1.0 ? 1 : static_cast<std::size_t>(raw), 1, std::max<std::size_t>(n, 1));
}

PredictedPointSet filter_by_variance(PredictedPointSet preds, const FilterConfig& cfg) {
  cfg.validate();
  if (preds.empty()) throw Error(ErrorKind::EmptyPredictionSet, "nothing to filter");
  std::vector<double> sorted;
  sorted.reserve(preds.points.size());
  for (const auto& p : preds.points) sorted.push_back(p.mean_rgb_var);
  const std::size_t k = quantile_rank(cfg.quantile, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  preds.threshold = sorted[k - 1];
  for (auto& p : preds.points) p.retained = p.mean_rgb_var <= preds.threshold;
  return preds;
}

std::uint8_t quantize_channel(double c) {
  const double clamped = std::clamp(c, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

DensifiedCloud merge_clouds(const SparseModel& sparse, const PredictedPointSet& preds) {
  DensifiedCloud cloud;
  cloud.points.reserve(sparse.points3d.size() + preds.retained_count());
  for (const auto& p : sparse.points3d) {
    CloudPoint cp;
    cp.position = {static_cast<float>(p.position[0]), static_cast<float>(p.position[1]),
                   static_cast<float>(p.position[2])};
    cp.color = p.color;
    cp.source = PointSource::SfM;
    cloud.points.push_back(cp);
  }
  for (const auto& p : preds.points) {
    if (!p.retained) continue;
    CloudPoint cp;
    cp.position = {static_cast<float>(p.mean[kX]), static_cast<float>(p.mean[kY]), static_cast<float>(p.mean[kZ])};
    cp.color = {quantize_channel(p.mean[kR]), quantize_channel(p.mean[kG]), quantize_channel(p.mean[kB])};
    cp.source = PointSource::GP;
    cloud.points.push_back(cp);
  }
  return cloud;
}

VarianceReport variance_reduction_report(const PredictedPointSet& preds) {
  auto channel = [&](auto value_of) {
    ChannelReduction c;
    double all = 0.0, kept = 0.0;
    std::size_t n_kept = 0;
    for (const auto& p : preds.points) {
      all += value_of(p);
      if (p.retained) {
        kept += value_of(p);
        ++n_kept;
      }
    }
    if (preds.points.empty()) return c;
    c.original = all / static_cast<double>(preds.points.size());
    c.filtered = n_kept ? kept / static_cast<double>(n_kept) : 0.0;
    c.reduction_percent = c.original > 0.0 ? 100.0 * (c.original - c.filtered) / c.original : 0.0;
    return c;
  };
  VarianceReport report;
  report.red = channel([](const PredictedPoint& p) { return p.variance[kR]; });
  report.green = channel([](const PredictedPoint& p) { return p.variance[kG]; });
  report.blue = channel([](const PredictedPoint& p) { return p.variance[kB]; });
  report.mean_rgb = channel([](const PredictedPoint& p) { return p.mean_rgb_var; });
  return report;
}

std::string VarianceReport::to_text() const {
  std::string out = "channel    original      filtered      reduction(%)\n";
  char buf[128];
  auto row = [&](const char* name, const ChannelReduction& c) {
    std::snprintf(buf, sizeof buf, "%-10s %-13.6g %-13.6g %.2f\n", name, c.original, c.filtered, c.reduction_percent);
    out += buf;
  };
  row("red", red);
  row("green", green);
  row("blue", blue);
  row("mean_rgb", mean_rgb);
  return out;
}

}  // namespace gpgs
