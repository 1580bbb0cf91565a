#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gpgs/depth.hpp"
#include "gpgs/sfm.hpp"

namespace gpgs {

inline constexpr std::size_t kOutputCount = 6;

/// Output channel order of every six-vector in the library.
enum Output : std::size_t { kX = 0, kY, kZ, kR, kG, kB };

inline constexpr std::array<const char*, kOutputCount> kOutputNames{"x", "y", "z", "r", "g", "b"};

/// GP input: pixel coordinates divided by image size, plus optional depth.
struct PixelSample {
  double u_norm = 0.0;
  double v_norm = 0.0;
  std::optional<double> depth;

  friend bool operator==(const PixelSample&, const PixelSample&) = default;
};

/// World position followed by colour in [0, 1].
using TargetVector = std::array<double, kOutputCount>;

struct Sample {
  PixelSample input;
  TargetVector target{};

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct PixelToPointDataset {
  ImageId image_id = 0;
  int width = 0;
  int height = 0;
  std::vector<Sample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  bool has_depth() const { return !samples.empty() && samples.front().input.depth.has_value(); }
};

/// One sample per linked feature of the image. With a depth map, depth is
/// looked up at the nearest pixel and features on invalid depth are skipped.
PixelToPointDataset build_pixel_dataset(const SparseModel& model, ImageId image_id,
                                        const DepthMap* depth = nullptr);

struct DatasetSplit {
  PixelToPointDataset train;
  PixelToPointDataset test;
  bool degenerate = false;  // one side came out empty
};

/// Seeded shuffle, then the first round(train_fraction * n) samples train.
DatasetSplit split_dataset(const PixelToPointDataset& ds, double train_fraction, std::uint64_t seed);

/// CSV interchange: a "# image_id=.. width=.. height=.." line, the column
/// header u_norm,v_norm,[depth,]x,y,z,r,g,b, then one row per sample.
void write_dataset_csv(const PixelToPointDataset& ds, const std::filesystem::path& path);
PixelToPointDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace gpgs
