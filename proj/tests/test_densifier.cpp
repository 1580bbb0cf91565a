#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpgs/densifier.hpp"
#include "gpgs/error.hpp"
#include "gpgs/pipeline.hpp"
#include "gpgs/rng.hpp"
#include "gpgs/sfm.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace gpgs;

namespace {

PredictedPointSet with_variances(const std::vector<double>& v) {
  PredictedPointSet s;
  for (double x : v) {
    PredictedPoint p;
    p.variance[kR] = p.variance[kG] = p.variance[kB] = x;
    p.mean_rgb_var = x;
    s.points.push_back(p);
  }
  return s;
}

std::vector<bool> mask(const PredictedPointSet& s) {
  std::vector<bool> m;
  for (const auto& p : s.points) m.push_back(p.retained);
  return m;
}

TrainedGP small_model(std::size_t n, std::uint64_t seed, double noise_var = 1e-4) {
  const auto ds = synthetic::make_dataset(synthetic::Scene::Smooth, n, 0.0, seed, 400, 400);
  const auto norm = OutputNormalizer::fit(target_matrix(ds));
  KernelConfig k;
  k.log_noise_var = std::log(noise_var);
  k.log_lengthscale = std::log(0.2);
  std::array<KernelConfig, kOutputCount> kernels;
  kernels.fill(k);
  std::array<double, kOutputCount> jitters{};
  auto gp = TrainedGP::condition(input_matrix(ds), norm.normalize(target_matrix(ds)), norm, kernels, jitters);
  gp.width = ds.width;
  gp.height = ds.height;
  return gp;
}

}  // namespace

TEST_CASE("generate_samples examples") {
  SamplingConfig cfg;
  const PixelCoord centre[] = {{100, 100}};
  const auto s = generate_samples(centre, 400, 400, cfg, 0);
  REQUIRE(s.size() == 8);
  CHECK(s[0].u_norm == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s[0].v_norm == doctest::Approx(0.25).epsilon(1e-15));

  cfg.angular_resolution = 4;
  const PixelCoord corner[] = {{0, 0}};
  const auto c = generate_samples(corner, 400, 400, cfg, 0);
  CHECK(c.size() == 2);

  cfg.angular_resolution = 1;
  const PixelCoord mid[] = {{200, 200}};
  CHECK(generate_samples(mid, 400, 400, cfg, 0).size() == 1);

  CHECK(generate_samples({}, 400, 400, cfg, 0).empty());
  cfg.beta = 1.0;
  CHECK_THROWS_AS(generate_samples(mid, 400, 400, cfg, 0), Error);
  cfg.beta = 0.25;
  cfg.angular_resolution = 0;
  CHECK_THROWS_AS(generate_samples(mid, 400, 400, cfg, 0), Error);
}

TEST_CASE("generated samples sit on the circle and inside the image") {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    const int w = 50 + static_cast<int>(rng.index(500));
    const int h = 50 + static_cast<int>(rng.index(500));
    SamplingConfig cfg;
    cfg.beta = rng.uniform(0.01, 0.9);
    cfg.angular_resolution = 1 + static_cast<int>(rng.index(16));
    const PixelCoord seed{rng.uniform(0, w), rng.uniform(0, h)};
    const double r = cfg.beta * std::min(w, h);
    for (const auto& s : generate_samples(std::span(&seed, 1), w, h, cfg, 0)) {
      CHECK(s.u_norm >= 0.0);
      CHECK(s.u_norm < 1.0);
      CHECK(s.v_norm >= 0.0);
      CHECK(s.v_norm < 1.0);
      const double u = s.u_norm * w, v = s.v_norm * h;
      CHECK(std::abs(std::hypot(u - seed.u, v - seed.v) - r) <= 1e-9);
    }
  }
}

TEST_CASE("in-disk sampling is seeded and stays within the radius") {
  SamplingConfig cfg;
  cfg.on_boundary = false;
  const PixelCoord p[] = {{200, 200}, {120, 260}};
  const auto a = generate_samples(p, 400, 400, cfg, 5);
  const auto b = generate_samples(p, 400, 400, cfg, 5);
  const auto c = generate_samples(p, 400, 400, cfg, 6);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto& s : a) {
    const double d = std::min(std::hypot(s.u_norm * 400 - 200, s.v_norm * 400 - 200),
                              std::hypot(s.u_norm * 400 - 120, s.v_norm * 400 - 260));
    CHECK(d <= 100.0 + 1e-9);
  }
}

TEST_CASE("repeated seed pixels do not produce repeated samples") {
  const PixelCoord p[] = {{100, 100}, {100, 100}};
  CHECK(generate_samples(p, 400, 400, SamplingConfig{}, 0).size() == 8);
}

TEST_CASE("attach_depth drops candidates on invalid depth") {
  DepthMap d{2, 1, {0.0f, 2.5f}};
  const std::vector<PixelSample> cand{{0.25, 0.5, {}}, {0.75, 0.5, {}}};
  const auto out = attach_depth(cand, d);
  REQUIRE(out.size() == 1);
  CHECK(*out[0].depth == 2.5);
}

TEST_CASE("filter_by_variance examples") {
  auto f = filter_by_variance(with_variances({4, 1, 3, 2}), FilterConfig{0.75});
  CHECK(mask(f) == std::vector<bool>{false, true, true, true});
  CHECK(f.threshold == 3.0);
  CHECK(f.retained_count() == 3);

  CHECK(filter_by_variance(with_variances({4, 1, 3, 2}), FilterConfig{1.0}).retained_count() == 4);
  CHECK(filter_by_variance(with_variances({5, 5, 5, 5}), FilterConfig{0.5}).retained_count() == 4);

  CHECK_THROWS_AS(filter_by_variance(PredictedPointSet{}, FilterConfig{}), Error);
  CHECK_THROWS_AS(filter_by_variance(with_variances({1}), FilterConfig{0.0}), Error);
  CHECK_THROWS_AS(filter_by_variance(with_variances({1}), FilterConfig{1.5}), Error);
}

TEST_CASE("quantile_rank") {
  CHECK(quantile_rank(0.75, 4) == 3);
  CHECK(quantile_rank(0.45, 100) == 45);
  CHECK(quantile_rank(0.85, 20) == 17);
  CHECK(quantile_rank(0.01, 10) == 1);
  CHECK(quantile_rank(1.0, 7) == 7);
}

TEST_CASE("filter keeps the quantile and separates retained from rejected") {
  Rng rng(22);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + rng.index(60));
    for (auto& x : v) x = t % 3 ? rng.uniform() : std::floor(rng.uniform(0, 4));
    for (double q : {0.45, 0.5, 0.75, 0.85, 1.0}) {
      const auto f = filter_by_variance(with_variances(v), FilterConfig{q});
      const std::size_t need = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()) - 1e-9));
      CHECK(f.retained_count() >= std::max<std::size_t>(need, 1));
      CHECK(f.retained_count() <= v.size());
      double kept_max = -INFINITY, dropped_min = INFINITY;
      for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(f.points[i].mean_rgb_var == v[i]);
        (f.points[i].retained ? kept_max : dropped_min) =
            f.points[i].retained ? std::max(kept_max, v[i]) : std::min(dropped_min, v[i]);
      }
      CHECK(kept_max < dropped_min);
    }
  }
}

TEST_CASE("variance report examples") {
  const auto f = filter_by_variance(with_variances({1, 2, 3, 4}), FilterConfig{0.75});
  const auto r = variance_reduction_report(f);
  CHECK(r.mean_rgb.original == doctest::Approx(2.5));
  CHECK(r.mean_rgb.filtered == doctest::Approx(2.0));
  CHECK(r.mean_rgb.reduction_percent == doctest::Approx(20.0));
  CHECK(r.red.reduction_percent == doctest::Approx(20.0));

  const auto all = variance_reduction_report(filter_by_variance(with_variances({1, 2, 3, 4}), FilterConfig{1.0}));
  CHECK(all.mean_rgb.reduction_percent == 0.0);
  const auto zero = variance_reduction_report(filter_by_variance(with_variances({0, 0}), FilterConfig{0.5}));
  CHECK(zero.mean_rgb.reduction_percent == 0.0);
  CHECK(r.to_text().find("mean_rgb") != std::string::npos);
}

TEST_CASE("filtering lowers mean variance whenever a point is rejected") {
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(2 + rng.index(100));
    for (auto& x : v) x = rng.uniform() * rng.uniform();
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) continue;
    const double q = rng.uniform(0.05, 0.99);
    const auto f = filter_by_variance(with_variances(v), FilterConfig{q});
    const auto r = variance_reduction_report(f);
    if (f.retained_count() < v.size())
      CHECK(r.mean_rgb.filtered < r.mean_rgb.original);
    else
      CHECK(r.mean_rgb.filtered == doctest::Approx(r.mean_rgb.original));
  }
}

TEST_CASE("quantize_channel clamps and rounds") {
  CHECK(quantize_channel(-0.02) == 0);
  CHECK(quantize_channel(1.3) == 255);
  CHECK(quantize_channel(0.5) == 128);
  CHECK(quantize_channel(128.0 / 255.0) == 128);
}

TEST_CASE("merge_clouds counts and sources") {
  const auto sparse = parse_colmap_model(GPGS_FIXTURE_DIR "/colmap_small");
  auto preds = with_variances({1, 2, 3, 4});
  preds.points[0].mean = {1, 2, 3, -0.02, 0.5, 2.0};
  preds = filter_by_variance(preds, FilterConfig{0.75});
  const auto cloud = merge_clouds(sparse, preds);
  REQUIRE(cloud.points.size() == 9);
  CHECK(cloud.count(PointSource::SfM) == 6);
  CHECK(cloud.count(PointSource::GP) == 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(cloud.points[i].source == PointSource::SfM);
  CHECK(cloud.points[0].position == std::array<float, 3>{1, 2, 3});
  CHECK(cloud.points[0].color == std::array<std::uint8_t, 3>{255, 0, 0});
  CHECK(cloud.points[6].color == std::array<std::uint8_t, 3>{0, 128, 255});

  for (auto& p : preds.points) p.retained = false;
  const auto only = merge_clouds(sparse, preds);
  REQUIRE(only.points.size() == sparse.points3d.size());
  for (std::size_t i = 0; i < only.points.size(); ++i)
    for (int a = 0; a < 3; ++a) CHECK(only.points[i].position[a] == static_cast<float>(sparse.points3d[i].position[a]));
}

TEST_CASE("infer_dense examples") {
  const auto gp = small_model(40, 24, 1e-10);
  CHECK(infer_dense(gp, {}).empty());

  std::vector<PixelSample> at_train;
  for (Eigen::Index i = 0; i < 5; ++i) at_train.push_back({gp.inputs()(i, 0), gp.inputs()(i, 1), {}});
  const auto preds = infer_dense(gp, at_train);
  const Eigen::MatrixXd truth = gp.normalizer().denormalize(gp.normalized_targets());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK_FALSE(preds.points[i].retained);
    CHECK(preds.points[i].mean_rgb_var <= 1e-6);
    for (std::size_t o = 0; o < kOutputCount; ++o)
      CHECK(std::abs(preds.points[i].mean[o] - truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o))) <=
            1e-4);
  }

  const std::vector<PixelSample> with_depth{{0.5, 0.5, 1.0}};
  CHECK_THROWS_AS(infer_dense(gp, with_depth), Error);
}

TEST_CASE("infer_dense variances match the dense oracle") {
  const auto gp = small_model(30, 25);
  Rng rng(26);
  std::vector<PixelSample> cand;
  Eigen::MatrixXd Q(5, 2);
  for (int i = 0; i < 5; ++i) {
    cand.push_back({rng.uniform(), rng.uniform(), {}});
    Q(i, 0) = cand.back().u_norm;
    Q(i, 1) = cand.back().v_norm;
  }
  const auto preds = infer_dense(gp, cand);
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto& om = gp.output(o);
    const auto ref = oracle::posterior_dense(om.kernel, gp.inputs(), gp.normalized_targets().col(static_cast<Eigen::Index>(o)),
                                             Q, om.jitter);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(preds.points[i].variance[o] - std::max(ref.variance[i], 0.0)) <= 1e-8);
  }
  for (const auto& p : preds.points)
    CHECK(std::abs(p.mean_rgb_var - (p.variance[kR] + p.variance[kG] + p.variance[kB]) / 3.0) <= 1e-12);
}

TEST_CASE("densify pools frames and merges with the sparse cloud") {
  const auto scene = synthetic::make_surface_scene(500, 60, 27);
  const auto ds = build_pixel_dataset(scene.model, scene.model.images.front().id);
  TrainConfig cfg;
  cfg.iterations = 10;
  std::vector<TrainedGP> models{train_gp(ds, KernelConfig{}, cfg)};
  const auto out = densify(scene.model, models, SamplingConfig{}, FilterConfig{}, 1);
  CHECK(out.candidate_count == out.predictions.points.size());
  CHECK(out.predictions.retained_count() >= quantile_rank(0.75, out.candidate_count));
  CHECK(out.cloud.count(PointSource::SfM) == scene.model.points3d.size());
  CHECK(out.cloud.count(PointSource::GP) == out.predictions.retained_count());
  for (const auto& p : out.cloud.points)
    for (float c : p.position) CHECK(std::isfinite(c));

  const auto again = densify(scene.model, models, SamplingConfig{}, FilterConfig{}, 1);
  CHECK(again.cloud.points == out.cloud.points);

  auto depth_model = ds;
  for (auto& s : depth_model.samples) s.input.depth = 1.0;
  std::vector<TrainedGP> dm{train_gp(depth_model, KernelConfig{}, cfg)};
  CHECK_THROWS_AS(densify(scene.model, dm, SamplingConfig{}, FilterConfig{}, 1), Error);
}

TEST_CASE("candidate count is bounded by M per training pixel") {
  const auto gp = small_model(100, 28);
  const auto preds = predict_candidates(gp, SamplingConfig{}, 0);
  CHECK(preds.points.size() <= 800);
  CHECK(preds.points.size() > 0);
}
