#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace gpgs {

enum class PointSource : std::uint8_t { SfM = 0, GP = 1 };

struct CloudPoint {
  std::array<float, 3> position{};
  std::array<std::uint8_t, 3> color{};
  PointSource source = PointSource::SfM;

  friend bool operator==(const CloudPoint&, const CloudPoint&) = default;
};

struct DensifiedCloud {
  std::vector<CloudPoint> points;

  std::size_t count(PointSource source) const;
};

/// Vertex element with float x,y,z; uchar red,green,blue; uchar source.
void write_ply(const DensifiedCloud& cloud, const std::filesystem::path& path, bool binary = true);

/// Reads ASCII or binary_little_endian PLY. Extra scalar vertex properties
/// are skipped; a missing source property reads as SfM and missing colours
/// as black.
DensifiedCloud read_ply(const std::filesystem::path& path);

}  // namespace gpgs
