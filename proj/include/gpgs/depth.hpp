#pragma once

#include <filesystem>
#include <optional>
#include <vector>

namespace gpgs {

/// Row-major depth grid, top row first. Values <= 0 mark invalid pixels.
struct DepthMap {
  static constexpr float kInvalid = 0.0f;

  int width = 0;
  int height = 0;
  std::vector<float> values;

  /// Depth at the pixel containing (u, v), clamped to the grid. Empty when
  /// the stored value is invalid.
  std::optional<double> nearest(double u, double v) const;
};

/// Reads a single-channel "Pf" portable float map. Rows are stored
/// bottom-to-top on disk; the negative scale sign selects little endian.
DepthMap read_depth_pfm(const std::filesystem::path& path);

/// Writes a little-endian "Pf" file (used for fixtures and round trips).
void write_depth_pfm(const DepthMap& depth, const std::filesystem::path& path);

}  // namespace gpgs
