#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "gpgs/rng.hpp"

namespace gpgs::synthetic {

namespace {
constexpr double kPi = std::numbers::pi;
}

TargetVector scene_target(Scene scene, double u, double v) {
  if (scene == Scene::Smooth) {
    return {2.0 * u - 1.0,
            1.5 * v - 0.75,
            0.3 * std::sin(2.0 * kPi * u) * std::cos(kPi * v) + 3.0,
            0.5 + 0.4 * std::sin(kPi * u),
            0.5 + 0.4 * std::cos(kPi * v),
            0.5 + 0.3 * std::sin(kPi * (u + v))};
  }
  const bool left = u < 0.45;
  const bool top = v < 0.4;
  return {2.0 * u - 1.0,
          1.5 * v - 0.75,
          (left ? 2.6 : 3.4) + (top ? 0.0 : 0.3),
          left ? 0.9 : 0.15,
          top ? 0.8 : 0.2,
          (u + v) < 0.9 ? 0.25 : 0.75};
}

PixelToPointDataset make_dataset(Scene scene, std::size_t n, double noise, std::uint64_t seed, int width,
                                 int height) {
  Rng rng(seed);
  PixelToPointDataset ds;
  ds.image_id = 1;
  ds.width = width;
  ds.height = height;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double px = rng.uniform(0.0, width);
    const double py = rng.uniform(0.0, height);
    Sample s;
    s.input = {px / width, py / height, std::nullopt};
    s.target = scene_target(scene, s.input.u_norm, s.input.v_norm);
    for (auto& t : s.target) t += noise * rng.normal();
    for (std::size_t c = kR; c <= kB; ++c) s.target[c] = std::clamp(s.target[c], 0.0, 1.0);
    ds.samples.push_back(s);
  }
  return ds;
}

SurfaceScene make_surface_scene(std::size_t ground_truth_count, std::size_t sparse_count, std::uint64_t seed,
                                int width, int height) {
  Rng rng(seed);
  SurfaceScene scene;
  scene.model.cameras.push_back({1, "PINHOLE", width, height, {500.0, 500.0, width / 2.0, height / 2.0}});
  ImageRecord image;
  image.id = 1;
  image.camera_id = 1;
  image.name = "surface.png";

  for (std::size_t i = 0; i < ground_truth_count; ++i) {
    const double px = rng.uniform(0.0, width);
    const double py = rng.uniform(0.0, height);
    const double u = px / width, v = py / height;
    // Gently curved sheet with a striped texture.
    const Point3 p{2.0 * u - 1.0, 1.5 * v - 0.75,
                   3.0 + 0.25 * std::sin(2.0 * kPi * u) * std::cos(1.5 * kPi * v)};
    scene.ground_truth.push_back(p);
    if (i < sparse_count) {
      Point3D pt;
      pt.id = i + 1;
      pt.position = p;
      const double stripe = 0.5 + 0.5 * std::sin(6.0 * kPi * u);
      pt.color = {static_cast<std::uint8_t>(std::lround(255.0 * stripe)),
                  static_cast<std::uint8_t>(std::lround(255.0 * v)),
                  static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - stripe) * u))};
      pt.track.push_back({1, static_cast<std::uint32_t>(image.features.size())});
      image.features.push_back({px, py, pt.id});
      scene.model.points3d.push_back(pt);
      scene.sparse_points.push_back(p);
    }
  }
  scene.model.images.push_back(std::move(image));
  scene.model.validate();
  return scene;
}

void write_colmap_model(const SparseModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream cams(dir / "cameras.txt");
  cams.precision(17);
  cams << "# CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  for (const auto& c : model.cameras) {
    cams << c.id << ' ' << c.model << ' ' << c.width << ' ' << c.height;
    for (double p : c.params) cams << ' ' << p;
    cams << '\n';
  }
  std::ofstream imgs(dir / "images.txt");
  imgs.precision(17);
  imgs << "# IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n# POINTS2D[] as (X, Y, POINT3D_ID)\n";
  for (const auto& img : model.images) {
    imgs << img.id;
    for (double q : img.qvec) imgs << ' ' << q;
    for (double t : img.tvec) imgs << ' ' << t;
    imgs << ' ' << img.camera_id << ' ' << img.name << '\n';
    bool first = true;
    for (const auto& f : img.features) {
      if (!first) imgs << ' ';
      first = false;
      imgs << f.u << ' ' << f.v << ' ';
      if (f.point3d_id)
        imgs << *f.point3d_id;
      else
        imgs << -1;
    }
    imgs << '\n';
  }
  std::ofstream pts(dir / "points3D.txt");
  pts.precision(17);
  pts << "# POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
  for (const auto& p : model.points3d) {
    pts << p.id << ' ' << p.position[0] << ' ' << p.position[1] << ' ' << p.position[2] << ' ' << int(p.color[0])
        << ' ' << int(p.color[1]) << ' ' << int(p.color[2]) << ' ' << p.error;
    for (const auto& t : p.track) pts << ' ' << t.image_id << ' ' << t.feature_index;
    pts << '\n';
  }
}

}  // namespace gpgs::synthetic
