#include "gpgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "gpgs/error.hpp"

namespace gpgs {

namespace {

constexpr double kBruteForcePairLimit = 5000.0 * 5000.0;

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void require_non_empty(std::span<const Point3> P, std::span<const Point3> G) {
  if (P.empty() || G.empty()) throw Error(ErrorKind::EmptySet, "chamfer distance needs two non-empty point sets");
}

double mean_nn_brute_force(std::span<const Point3> from, std::span<const Point3> to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : to) best = std::min(best, distance(p, g));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

// Points bucketed into cubic cells of side `cell`, stored contiguously per
// cell (counting sort).
class UniformGrid {
 public:
  explicit UniformGrid(std::span<const Point3> points) : points_(points) {
    Point3 hi = points[0];
    lo_ = points[0];
    for (const auto& p : points)
      for (int a = 0; a < 3; ++a) {
        lo_[a] = std::min(lo_[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    const double extent = std::max({hi[0] - lo_[0], hi[1] - lo_[1], hi[2] - lo_[2]});
    cell_ = extent > 0.0 ? extent / std::max(1.0, std::cbrt(static_cast<double>(points.size()))) : 1.0;
    for (int a = 0; a < 3; ++a)
      dims_[a] = std::max<long>(1, static_cast<long>(std::floor((hi[a] - lo_[a]) / cell_)) + 1);

    std::vector<std::size_t> cell_of(points.size());
    start_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]) + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = coord(points[i]);
      cell_of[i] = flat(c[0], c[1], c[2]);
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    order_.resize(points.size());
    auto fill = start_;
    for (std::size_t i = 0; i < points.size(); ++i) order_[fill[cell_of[i]]++] = i;
  }

  double nearest(const Point3& q) const {
    const auto c = coord(q);
    // Rings closer than this Chebyshev radius hold no grid cells.
    long k0 = 0;
    for (int a = 0; a < 3; ++a) k0 = std::max({k0, -c[a], c[a] - (dims_[a] - 1)});
    const long k_max = k0 + std::max({dims_[0], dims_[1], dims_[2]});

    double best = std::numeric_limits<double>::infinity();
    for (long k = k0; k <= k_max; ++k) {
      scan_ring(q, c, k, best);
      // Anything unvisited lies at least k cells away from q's own cell.
      if (best <= static_cast<double>(k) * cell_) break;
    }
    return best;
  }

 private:
  std::array<long, 3> coord(const Point3& p) const {
    std::array<long, 3> c{};
    for (int a = 0; a < 3; ++a) c[a] = static_cast<long>(std::floor((p[a] - lo_[a]) / cell_));
    return c;
  }

  std::size_t flat(long x, long y, long z) const {
    return static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x);
  }

  void scan_cell(const Point3& q, long x, long y, long z, double& best) const {
    if (x < 0 || y < 0 || z < 0 || x >= dims_[0] || y >= dims_[1] || z >= dims_[2]) return;
    const auto f = flat(x, y, z);
    for (auto i = start_[f]; i < start_[f + 1]; ++i) best = std::min(best, distance(q, points_[order_[i]]));
  }

  void scan_ring(const Point3& q, const std::array<long, 3>& c, long k, double& best) const {
    const long x0 = std::max(c[0] - k, 0L), x1 = std::min(c[0] + k, dims_[0] - 1);
    const long y0 = std::max(c[1] - k, 0L), y1 = std::min(c[1] + k, dims_[1] - 1);
    for (long x = x0; x <= x1; ++x) {
      for (long y = y0; y <= y1; ++y) {
        if (std::abs(x - c[0]) == k || std::abs(y - c[1]) == k) {
          const long z0 = std::max(c[2] - k, 0L), z1 = std::min(c[2] + k, dims_[2] - 1);
          for (long z = z0; z <= z1; ++z) scan_cell(q, x, y, z, best);
        } else {
          scan_cell(q, x, y, c[2] - k, best);
          if (k > 0) scan_cell(q, x, y, c[2] + k, best);
        }
      }
    }
  }

  std::span<const Point3> points_;
  Point3 lo_{};
  double cell_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

double mean_nn_indexed(std::span<const Point3> from, std::span<const Point3> to) {
  const UniformGrid grid(to);
  double sum = 0.0;
  for (const auto& p : from) sum += grid.nearest(p);
  return sum / static_cast<double>(from.size());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double chamfer_distance_brute_force(std::span<const Point3> P, std::span<const Point3> G) {
  require_non_empty(P, G);
  return mean_nn_brute_force(P, G) + mean_nn_brute_force(G, P);
}

double chamfer_distance_indexed(std::span<const Point3> P, std::span<const Point3> G) {
  require_non_empty(P, G);
  return mean_nn_indexed(P, G) + mean_nn_indexed(G, P);
}

double chamfer_distance(std::span<const Point3> P, std::span<const Point3> G) {
  require_non_empty(P, G);
  if (static_cast<double>(P.size()) * static_cast<double>(G.size()) <= kBruteForcePairLimit)
    return chamfer_distance_brute_force(P, G);
  return chamfer_distance_indexed(P, G);
}

double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || pred.size() == 0)
    throw Error(ErrorKind::ShapeMismatch, "rmse needs equally shaped, non-empty inputs");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double r2_score(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorKind::ShapeMismatch, "r2 needs equally sized inputs");
  if (truth.size() < 2) throw Error(ErrorKind::ConstantTruth, "r2 needs at least two values");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw Error(ErrorKind::ConstantTruth, "truth values are constant");
  return 1.0 - ss_res / ss_tot;
}

MetricsBundle evaluate_holdout(const TrainedGP& model, const PixelToPointDataset& test) {
  if (test.empty()) throw Error(ErrorKind::EmptyDataset, "held-out set is empty");
  const Eigen::MatrixXd truth = target_matrix(test);
  const Eigen::MatrixXd pred = model.posterior(input_matrix(test)).mean;

  MetricsBundle m;
  m.sample_count = test.size();
  m.rmse = rmse(pred, truth);

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto c = static_cast<Eigen::Index>(o);
    const Eigen::VectorXd p = pred.col(c);
    const Eigen::VectorXd t = truth.col(c);
    m.rmse_per_output[o] = rmse(p, t);
    try {
      m.r2_per_output[o] = r2_score(std::span<const double>(p.data(), p.size()),
                                    std::span<const double>(t.data(), t.size()));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ConstantTruth) throw;
    }
    ss_res += (t - p).squaredNorm();
    ss_tot += (t.array() - t.mean()).square().sum();
  }
  if (!(ss_tot > 0.0)) throw Error(ErrorKind::ConstantTruth, "held-out targets are constant in every output");
  m.r2 = 1.0 - ss_res / ss_tot;

  std::vector<Point3> predicted(test.size()), actual(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    predicted[i] = {pred(r, 0), pred(r, 1), pred(r, 2)};
    actual[i] = {truth(r, 0), truth(r, 1), truth(r, 2)};
  }
  m.chamfer = chamfer_distance(predicted, actual);
  return m;
}

std::string MetricsBundle::to_csv() const {
  std::string out = "metric,output,value\n";
  out += "r2,joint," + fmt(r2) + "\n";
  out += "rmse,joint," + fmt(rmse) + "\n";
  out += "chamfer,xyz," + fmt(chamfer) + "\n";
  out += "sample_count,joint," + std::to_string(sample_count) + "\n";
  for (std::size_t o = 0; o < kOutputCount; ++o)
    out += std::string("r2,") + kOutputNames[o] + "," + (r2_per_output[o] ? fmt(*r2_per_output[o]) : "NA") + "\n";
  for (std::size_t o = 0; o < kOutputCount; ++o)
    out += std::string("rmse,") + kOutputNames[o] + "," + fmt(rmse_per_output[o]) + "\n";
  return out;
}

std::string MetricsBundle::to_text() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "held-out samples: %zu\nR2 %.4f   RMSE %.4f   CD %.4f\n", sample_count, r2, rmse,
                chamfer);
  out += buf;
  out += "output  r2        rmse\n";
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    if (r2_per_output[o])
      std::snprintf(buf, sizeof buf, "%-7s %-9.4f %.4f\n", kOutputNames[o], *r2_per_output[o], rmse_per_output[o]);
    else
      std::snprintf(buf, sizeof buf, "%-7s %-9s %.4f\n", kOutputNames[o], "NA", rmse_per_output[o]);
    out += buf;
  }
  return out;
}

}  // namespace gpgs
