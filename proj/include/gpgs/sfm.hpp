#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpgs {

using ImageId = std::uint32_t;
using Point3dId = std::uint64_t;

struct CameraIntrinsics {
  std::uint32_t id = 0;
  std::string model;
  int width = 0;
  int height = 0;
  std::vector<double> params;
};

/// 2D keypoint of an image; point3d_id is empty for unmatched features
/// (written as -1 in COLMAP text files).
struct Feature {
  double u = 0.0;
  double v = 0.0;
  std::optional<Point3dId> point3d_id;
};

struct ImageRecord {
  ImageId id = 0;
  std::array<double, 4> qvec{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
  std::array<double, 3> tvec{0.0, 0.0, 0.0};
  std::uint32_t camera_id = 0;
  std::string name;
  std::vector<Feature> features;

  std::size_t linked_feature_count() const;
};

struct TrackElement {
  ImageId image_id = 0;
  std::uint32_t feature_index = 0;
};

struct Point3D {
  Point3dId id = 0;
  std::array<double, 3> position{};
  std::array<std::uint8_t, 3> color{};
  double error = 0.0;
  std::vector<TrackElement> track;
};

/// Parsed SfM reconstruction. Build it with parse_colmap_model, or call
/// validate() after assembling one by hand.
struct SparseModel {
  std::vector<CameraIntrinsics> cameras;
  std::vector<ImageRecord> images;
  std::vector<Point3D> points3d;

  const ImageRecord* find_image(ImageId id) const;
  const CameraIntrinsics* find_camera(std::uint32_t id) const;
  const Point3D* find_point(Point3dId id) const;

  /// Throws DuplicateId or DanglingReference when ids collide or a feature
  /// or track cites something that does not exist.
  void validate() const;
};

/// Reads cameras.txt, images.txt and points3D.txt from a COLMAP text export.
SparseModel parse_colmap_model(const std::filesystem::path& dir);

/// Images ranked by number of linked features, descending; ties go to the
/// smaller image id. Returns min(k, image count) ids.
std::vector<ImageId> select_key_frames(const SparseModel& model, std::size_t k);

}  // namespace gpgs
