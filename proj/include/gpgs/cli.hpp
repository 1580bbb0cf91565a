#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpgs/densifier.hpp"
#include "gpgs/gp.hpp"
#include "gpgs/kernel.hpp"

namespace gpgs::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kInputData = 2, kNumerical = 3 };

/// Effective settings of one run. Keys are the long flag names without
/// the leading dashes; the same keys are accepted in a config file.
struct RunConfig {
  std::filesystem::path model_dir;
  std::filesystem::path output = "gpgs_out";
  std::optional<std::filesystem::path> dataset;
  std::vector<std::filesystem::path> gp_models;
  std::optional<std::filesystem::path> depth_dir;
  std::size_t key_frames = 1;
  KernelConfig kernel;  // family and nu; log parameters keep their defaults
  SamplingConfig sampling;
  FilterConfig filter;
  TrainConfig train;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool ply_binary = true;

  /// Parses and range-checks one value. Throws Error(InvalidArgument).
  void set(std::string_view key, std::string_view value);

  /// "key = value" lines, one per setting, in a fixed order.
  std::string to_text() const;

  static const std::vector<std::string>& keys();
};

/// Applies "key = value" lines ('#' starts a comment) on top of cfg.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Runs one command line (args excludes the program name) and returns the
/// exit status: 0 success, 1 usage error, 2 input-data error, 3 numerical
/// failure. Diagnostics go to err as a single line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpgs::cli
