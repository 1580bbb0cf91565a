#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "gpgs/dataset.hpp"
#include "gpgs/gp.hpp"

namespace gpgs {

using Point3 = std::array<double, 3>;

/// Mean nearest-neighbour Euclidean distance from P to G plus from G to P.
/// Uses brute force up to 5000 x 5000 pairs and a uniform grid above that.
double chamfer_distance(std::span<const Point3> P, std::span<const Point3> G);
double chamfer_distance_brute_force(std::span<const Point3> P, std::span<const Point3> G);
double chamfer_distance_indexed(std::span<const Point3> P, std::span<const Point3> G);

/// Root mean square over every entry. Throws ShapeMismatch.
double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// 1 - SS_res / SS_tot. Throws ShapeMismatch, or ConstantTruth when truth
/// has zero spread (which includes n < 2).
double r2_score(std::span<const double> pred, std::span<const double> truth);

struct MetricsBundle {
  double r2 = 0.0;       // all six outputs, each centred on its own mean
  double rmse = 0.0;     // all six outputs, original units
  double chamfer = 0.0;  // predicted vs true (x, y, z)
  std::size_t sample_count = 0;
  std::array<std::optional<double>, kOutputCount> r2_per_output;  // empty for constant truth
  std::array<double, kOutputCount> rmse_per_output{};

  /// "metric,output,value" rows; absent values are written as "NA".
  std::string to_csv() const;
  std::string to_text() const;
};

MetricsBundle evaluate_holdout(const TrainedGP& model, const PixelToPointDataset& test);

}  // namespace gpgs
