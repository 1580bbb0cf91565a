#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gpgs/cloud.hpp"
#include "gpgs/dataset.hpp"
#include "gpgs/depth.hpp"
#include "gpgs/gp.hpp"
#include "gpgs/sfm.hpp"

namespace gpgs {

struct SamplingConfig {
  double beta = 0.25;          // radius = beta * min(width, height)
  int angular_resolution = 8;  // samples per seed pixel
  bool on_boundary = true;     // false: seeded uniform radius in (0, r]

  void validate() const;
};

struct FilterConfig {
  double quantile = 0.75;  // fraction of lowest-variance predictions kept

  void validate() const;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Candidate pixels on a circle of radius beta * min(W, H) around each seed
/// pixel at angles 2 pi j / M. Candidates outside [0, W) x [0, H) are
/// dropped, exact repeats removed, and the rest divided by (W, H).
std::vector<PixelSample> generate_samples(std::span<const PixelCoord> train_pixels, int width, int height,
                                          const SamplingConfig& cfg, std::uint64_t seed);

/// Seed pixels of a dataset, recovered from its normalised coordinates.
std::vector<PixelCoord> dataset_pixels(const PixelToPointDataset& ds);

/// Looks up depth for each candidate; candidates on invalid depth are dropped.
std::vector<PixelSample> attach_depth(std::span<const PixelSample> candidates, const DepthMap& depth);

struct PredictedPoint {
  PixelSample pixel;
  TargetVector mean{};                          // original units
  std::array<double, kOutputCount> variance{};  // normalised-target space
  double mean_rgb_var = 0.0;                    // (var_r + var_g + var_b) / 3
  bool retained = false;
};

struct PredictedPointSet {
  std::vector<PredictedPoint> points;
  double threshold = std::numeric_limits<double>::quiet_NaN();  // set by filtering

  std::size_t retained_count() const;
  bool empty() const { return points.empty(); }
};

/// Batched posterior over the candidates; nothing is retained yet.
PredictedPointSet infer_dense(const TrainedGP& model, std::span<const PixelSample> candidates);

/// 1-based rank ceil(q * n), clamped to [1, n].
std::size_t quantile_rank(double q, std::size_t n);

/// Threshold tau is the quantile_rank-th smallest mean RGB variance; points
/// with variance <= tau are retained. Order is preserved.
PredictedPointSet filter_by_variance(PredictedPointSet preds, const FilterConfig& cfg);

/// 8-bit colour from a [0, 1] prediction: clamp, then round(c * 255).
std::uint8_t quantize_channel(double c);

/// All sparse points (tagged SfM) followed by retained predictions (GP).
DensifiedCloud merge_clouds(const SparseModel& sparse, const PredictedPointSet& preds);

struct ChannelReduction {
  double original = 0.0;
  double filtered = 0.0;
  double reduction_percent = 0.0;
};

/// Mean variance before and after filtering for R, G, B and their average.
struct VarianceReport {
  ChannelReduction red, green, blue, mean_rgb;

  std::string to_text() const;
};

VarianceReport variance_reduction_report(const PredictedPointSet& preds);

}  // namespace gpgs
