#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "gpgs/error.hpp"
#include "gpgs/metrics.hpp"
#include "gpgs/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace gpgs;

namespace {

std::vector<Point3> random_cloud(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<Point3> pts(n);
  for (auto& p : pts) p = {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
  return pts;
}

}  // namespace

TEST_CASE("chamfer examples") {
  const std::vector<Point3> a{{0, 0, 0}, {2, 0, 0}}, b{{1, 0, 0}}, o{{0, 0, 0}};
  CHECK(chamfer_distance(a, a) == 0.0);
  CHECK(chamfer_distance(o, b) == 2.0);
  CHECK(chamfer_distance(a, b) == 2.0);
  CHECK_THROWS_AS(chamfer_distance({}, b), Error);
  CHECK_THROWS_AS(chamfer_distance_indexed(a, {}), Error);
}

TEST_CASE("chamfer is symmetric and translation invariant") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto P = random_cloud(rng, 1 + rng.index(200));
    const auto G = random_cloud(rng, 1 + rng.index(200));
    CHECK(chamfer_distance(P, G) == chamfer_distance(G, P));
    CHECK(chamfer_distance(P, P) == 0.0);
    const Point3 shift{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    auto Ps = P, Gs = G;
    for (auto& p : Ps)
      for (int a = 0; a < 3; ++a) p[a] += shift[a];
    for (auto& p : Gs)
      for (int a = 0; a < 3; ++a) p[a] += shift[a];
    CHECK(std::abs(chamfer_distance(Ps, Gs) - chamfer_distance(P, G)) <= 1e-9);
  }
}

TEST_CASE("indexed chamfer equals brute force and the double-loop oracle") {
  Rng rng(32);
  for (int t = 0; t < 40; ++t) {
    const auto P = random_cloud(rng, 1 + rng.index(200), t % 2 ? 1.0 : 100.0);
    auto G = random_cloud(rng, 1 + rng.index(200));
    if (t % 5 == 0) G.assign(G.size(), G.front());
    const double brute = chamfer_distance_brute_force(P, G);
    CHECK(std::abs(chamfer_distance_indexed(P, G) - brute) <= 1e-12);
    CHECK(std::abs(oracle::chamfer(P, G) - brute) <= 1e-12);
  }
  const auto P = random_cloud(rng, 6000);
  const auto G = random_cloud(rng, 5000);
  CHECK(std::abs(chamfer_distance(P, G) - chamfer_distance_brute_force(P, G)) <= 1e-12);
}

TEST_CASE("rmse examples") {
  Eigen::MatrixXd p(1, 2), t(1, 2);
  p << 0, 0;
  t << 3, 4;
  CHECK(rmse(p, t) == doctest::Approx(3.535534).epsilon(1e-6));
  CHECK(rmse(t, t) == 0.0);
  CHECK(rmse(3.0 * p, 3.0 * t) == doctest::Approx(3.0 * rmse(p, t)));
  CHECK_THROWS_AS(rmse(p, Eigen::MatrixXd::Zero(2, 2)), Error);
}

TEST_CASE("r2 examples and errors") {
  const std::vector<double> truth{0, 1, 2}, zeros{0, 0, 0}, mean{1, 1, 1};
  CHECK(r2_score(zeros, truth) == doctest::Approx(-1.5));
  CHECK(r2_score(truth, truth) == 1.0);
  CHECK(r2_score(mean, truth) == 0.0);
  CHECK_THROWS_AS(r2_score(truth, mean), Error);
  CHECK_THROWS_AS(r2_score(std::vector<double>{1}, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(r2_score(zeros, std::vector<double>{1, 2}), Error);
}

TEST_CASE("r2 is invariant under a shared affine map") {
  Rng rng(33);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> p(10), g(10);
    for (std::size_t i = 0; i < 10; ++i) {
      g[i] = rng.normal();
      p[i] = g[i] + 0.3 * rng.normal();
    }
    const double a = rng.uniform(0.1, 5) * (t % 2 ? 1 : -1), b = rng.uniform(-10, 10);
    auto pa = p, ga = g;
    for (std::size_t i = 0; i < 10; ++i) {
      pa[i] = a * p[i] + b;
      ga[i] = a * g[i] + b;
    }
    CHECK(r2_score(pa, ga) == doctest::Approx(r2_score(p, g)).epsilon(1e-9));
  }
}

TEST_CASE("evaluate_holdout on training data recovers the targets") {
  const auto ds = synthetic::make_dataset(synthetic::Scene::Smooth, 80, 0.0, 34);
  const auto norm = OutputNormalizer::fit(target_matrix(ds));
  KernelConfig k;
  k.log_noise_var = std::log(1e-10);
  std::array<KernelConfig, kOutputCount> kernels;
  kernels.fill(k);
  std::array<double, kOutputCount> jitters{};
  const auto gp = TrainedGP::condition(input_matrix(ds), norm.normalize(target_matrix(ds)), norm, kernels, jitters);
  PixelToPointDataset sub = ds;
  sub.samples.resize(30);
  const auto m = evaluate_holdout(gp, sub);
  CHECK(m.sample_count == 30);
  CHECK(m.r2 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.rmse <= 1e-6);
  CHECK(m.chamfer <= 1e-6);
  for (const auto& r : m.r2_per_output) CHECK(r.has_value());

  const auto csv = m.to_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "metric,output,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 16);
  CHECK(m.to_text().find("R2") != std::string::npos);

  CHECK_THROWS_AS(evaluate_holdout(gp, PixelToPointDataset{}), Error);
}

TEST_CASE("constant truth in one output is reported as absent") {
  auto ds = synthetic::make_dataset(synthetic::Scene::Smooth, 40, 0.01, 35);
  for (auto& s : ds.samples) s.target[kB] = 0.5;
  TrainConfig cfg;
  cfg.iterations = 5;
  const auto gp = train_gp(ds, KernelConfig{}, cfg);
  const auto m = evaluate_holdout(gp, ds);
  CHECK_FALSE(m.r2_per_output[kB].has_value());
  CHECK(m.r2_per_output[kX].has_value());
  CHECK(m.to_csv().find("r2,b,NA") != std::string::npos);
  CHECK(std::isfinite(m.r2));
}

TEST_CASE("rough kernel predicts a piecewise scene no worse than a smooth one") {
  const auto ds = synthetic::make_dataset(synthetic::Scene::Piecewise, 300, 0.01, 36);
  const auto split = split_dataset(ds, 0.8, 36);
  TrainConfig cfg;
  cfg.iterations = 100;
  KernelConfig rough, smooth;
  rough.nu = 0.5;
  smooth.nu = 2.5;
  const auto a = evaluate_holdout(train_gp(split.train, rough, cfg), split.test);
  const auto b = evaluate_holdout(train_gp(split.train, smooth, cfg), split.test);
  CHECK(a.rmse <= b.rmse);
}
