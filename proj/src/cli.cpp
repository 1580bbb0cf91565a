#include "gpgs/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "gpgs/dataset.hpp"
#include "gpgs/error.hpp"
#include "gpgs/metrics.hpp"
#include "gpgs/pipeline.hpp"
#include "gpgs/sfm.hpp"

namespace gpgs::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* why) {
  throw Error(ErrorKind::InvalidArgument, "--" + std::string(key) + " '" + std::string(value) + "': " + why);
}

double to_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  bad_value(key, value, "not a number");
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  const std::string s(value);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) bad_value(key, value, "not a count");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    bad_value(key, value, "out of range");
  }
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "expected true or false");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int exit_code_for(ErrorKind kind) {
  if (kind == ErrorKind::InvalidArgument) return kUsage;
  if (is_numerical(kind)) return kNumerical;
  return kInputData;
}

std::string frame_suffix(std::size_t rank, std::size_t count) {
  return count == 1 ? std::string() : "_" + std::to_string(rank);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

void prepare_output(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + cfg.output.string() + ": " + ec.message());
  write_text(cfg.output / "run-config.txt", cfg.to_text());
}

SparseModel load_sparse(const RunConfig& cfg) {
  if (cfg.model_dir.empty()) throw Error(ErrorKind::InvalidArgument, "--model-dir is required");
  return parse_colmap_model(cfg.model_dir);
}

std::optional<DepthMap> depth_for_image(const RunConfig& cfg, const SparseModel& model, ImageId id) {
  if (!cfg.depth_dir) return std::nullopt;
  const ImageRecord* image = model.find_image(id);
  if (!image) throw Error(ErrorKind::UnknownImage, "image " + std::to_string(id) + " not in model");
  const fs::path path = *cfg.depth_dir / (fs::path(image->name).stem().string() + ".pfm");
  if (!fs::exists(path)) throw Error(ErrorKind::MissingFile, "missing depth map " + path.string());
  return read_depth_pfm(path);
}

std::vector<fs::path> dataset_paths(const RunConfig& cfg) {
  if (cfg.dataset) return {*cfg.dataset};
  std::vector<fs::path> paths;
  for (std::size_t r = 1; r <= cfg.key_frames; ++r)
    paths.push_back(cfg.output / ("dataset" + frame_suffix(r, cfg.key_frames) + ".csv"));
  return paths;
}

std::vector<fs::path> model_paths(const RunConfig& cfg, std::size_t count) {
  if (!cfg.gp_models.empty()) return cfg.gp_models;
  std::vector<fs::path> paths;
  for (std::size_t r = 1; r <= count; ++r) paths.push_back(cfg.output / ("model" + frame_suffix(r, count) + ".gpgs"));
  return paths;
}

int cmd_build_dataset(const RunConfig& cfg, std::ostream& out) {
  const SparseModel model = load_sparse(cfg);
  const auto frames = select_key_frames(model, cfg.key_frames);
  prepare_output(cfg);

  out << "rank  image_id  linked  name\n";
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const ImageRecord* img = model.find_image(frames[r]);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-5zu %-9u %-7zu ", r + 1, img->id, img->linked_feature_count());
    out << buf << img->name << '\n';
  }
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const auto depth = depth_for_image(cfg, model, frames[r]);
    const auto ds = build_pixel_dataset(model, frames[r], depth ? &*depth : nullptr);
    const fs::path path = cfg.output / ("dataset" + frame_suffix(r + 1, frames.size()) + ".csv");
    write_dataset_csv(ds, path);
    out << "wrote " << path.string() << " (" << ds.size() << " samples)\n";
  }
  return kSuccess;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto datasets = dataset_paths(cfg);
  prepare_output(cfg);
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  for (std::size_t r = 0; r < datasets.size(); ++r) {
    const auto ds = read_dataset_csv(datasets[r]);
    const TrainedGP gp = train_gp(ds, cfg.kernel, train);
    const std::string suffix = frame_suffix(r + 1, datasets.size());
    save_model(gp, cfg.output / ("model" + suffix + ".gpgs"));

    std::string curve = "iter,output,loss\n";
    for (std::size_t o = 0; o < kOutputCount; ++o) {
      const auto& losses = gp.output(o).loss_curve;
      for (std::size_t t = 0; t < losses.size(); ++t)
        curve += std::to_string(t + 1) + "," + kOutputNames[o] + "," + num(losses[t]) + "\n";
    }
    write_text(cfg.output / ("loss" + suffix + ".csv"), curve);

    out << "image " << gp.image_id << ": trained on " << gp.train_size() << " samples\n";
    for (std::size_t o = 0; o < kOutputCount; ++o) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "  %s  initial NLL %.6g  final NLL %.6g\n", kOutputNames[o],
                    gp.output(o).initial_loss, gp.output(o).final_loss);
      out << buf;
    }
  }
  return kSuccess;
}

int cmd_densify(const RunConfig& cfg, std::ostream& out) {
  const SparseModel sparse = load_sparse(cfg);
  const auto paths = model_paths(cfg, cfg.key_frames);
  std::vector<TrainedGP> models;
  for (const auto& p : paths) models.push_back(load_model(p));
  std::vector<std::optional<DepthMap>> depth_store;
  std::vector<const DepthMap*> depths;
  for (const auto& m : models) {
    depth_store.push_back(m.input_dim() == 3 ? depth_for_image(cfg, sparse, m.image_id) : std::nullopt);
  }
  for (const auto& d : depth_store) depths.push_back(d ? &*d : nullptr);
  prepare_output(cfg);

  const DensifyOutcome result = densify(sparse, models, cfg.sampling, cfg.filter, cfg.seed, depths);
  const fs::path ply = cfg.output / "dense.ply";
  write_ply(result.cloud, ply, cfg.ply_binary);
  const std::string report = result.report.to_text();
  write_text(cfg.output / "variance-report.txt", report);

  out << "sparse points:   " << sparse.points3d.size() << '\n';
  out << "candidates:      " << result.candidate_count << '\n';
  out << "retained:        " << result.predictions.retained_count() << '\n';
  out << "output points:   " << result.cloud.points.size() << '\n';
  out << report;
  out << "wrote " << ply.string() << '\n';
  return kSuccess;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto datasets = dataset_paths(cfg);
  prepare_output(cfg);
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  for (std::size_t r = 0; r < datasets.size(); ++r) {
    const auto ds = read_dataset_csv(datasets[r]);
    const auto split = split_dataset(ds, cfg.train_fraction, cfg.seed);
    if (split.degenerate)
      err << "warning: split of " << ds.size() << " samples leaves " << split.train.size() << " train / "
          << split.test.size() << " test\n";
    if (split.test.empty()) throw Error(ErrorKind::EmptyDataset, "held-out set is empty");
    const TrainedGP gp = train_gp(split.train, cfg.kernel, train);
    const MetricsBundle metrics = evaluate_holdout(gp, split.test);
    const std::string suffix = frame_suffix(r + 1, datasets.size());
    write_text(cfg.output / ("metrics" + suffix + ".csv"), metrics.to_csv());
    write_text(cfg.output / ("metrics" + suffix + ".txt"), metrics.to_text());
    out << "image " << ds.image_id << '\n' << metrics.to_text();
  }
  return kSuccess;
}

int cmd_pipeline(RunConfig cfg, std::ostream& out, std::ostream& err) {
  cfg.dataset.reset();
  cfg.gp_models.clear();
  const SparseModel model = load_sparse(cfg);
  cfg.key_frames = std::min(cfg.key_frames, model.images.size());
  if (int rc = cmd_build_dataset(cfg, out); rc != kSuccess) return rc;
  if (int rc = cmd_train(cfg, out); rc != kSuccess) return rc;
  if (int rc = cmd_densify(cfg, out); rc != kSuccess) return rc;
  return cmd_evaluate(cfg, out, err);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "model-dir",        "dataset",          "output",          "gp-model",       "depth-dir",
      "key-frames",       "kernel",           "nu",              "beta",           "angular-resolution",
      "sample-in-disk",   "filter-quantile",  "iterations",      "learning-rate",  "l2-weight",
      "max-train-points", "train-fraction",   "seed",            "ascii-ply"};
  return k;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "model-dir") {
    model_dir = std::string(value);
  } else if (key == "dataset") {
    dataset = std::string(value);
  } else if (key == "output") {
    if (value.empty()) bad_value(key, value, "empty path");
    output = std::string(value);
  } else if (key == "gp-model") {
    gp_models.emplace_back(std::string(value));
  } else if (key == "depth-dir") {
    depth_dir = std::string(value);
  } else if (key == "key-frames") {
    key_frames = to_uint(key, value);
    if (key_frames < 1) bad_value(key, value, "must be at least 1");
  } else if (key == "kernel") {
    kernel.family = parse_kernel_family(value);
  } else if (key == "nu") {
    const double nu = to_double(key, value);
    if (nu != 0.5 && nu != 1.5 && nu != 2.5) bad_value(key, value, "must be 0.5, 1.5 or 2.5");
    kernel.nu = nu;
  } else if (key == "beta") {
    sampling.beta = to_double(key, value);
    if (!(sampling.beta > 0.0 && sampling.beta < 1.0)) bad_value(key, value, "must lie in (0, 1)");
  } else if (key == "angular-resolution") {
    const auto m = to_uint(key, value);
    if (m < 1 || m > 1u << 20) bad_value(key, value, "must be at least 1");
    sampling.angular_resolution = static_cast<int>(m);
  } else if (key == "sample-in-disk") {
    sampling.on_boundary = !to_bool(key, value);
  } else if (key == "filter-quantile") {
    filter.quantile = to_double(key, value);
    if (!(filter.quantile > 0.0 && filter.quantile <= 1.0)) bad_value(key, value, "must lie in (0, 1]");
  } else if (key == "iterations") {
    const auto t = to_uint(key, value);
    if (t < 1 || t > 100'000'000) bad_value(key, value, "must be at least 1");
    train.iterations = static_cast<int>(t);
  } else if (key == "learning-rate") {
    train.learning_rate = to_double(key, value);
    if (!(train.learning_rate > 0.0)) bad_value(key, value, "must be positive");
  } else if (key == "l2-weight") {
    train.l2_weight = to_double(key, value);
    if (!(train.l2_weight >= 0.0)) bad_value(key, value, "must be non-negative");
  } else if (key == "max-train-points") {
    train.max_train_points = to_uint(key, value);
  } else if (key == "train-fraction") {
    train_fraction = to_double(key, value);
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) bad_value(key, value, "must lie in (0, 1)");
  } else if (key == "seed") {
    seed = to_uint(key, value);
  } else if (key == "ascii-ply") {
    ply_binary = !to_bool(key, value);
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown setting '" + std::string(key) + "'");
  }
}

std::string RunConfig::to_text() const {
  std::string t;
  auto line = [&](const char* key, const std::string& value) { t += std::string(key) + " = " + value + "\n"; };
  line("model-dir", model_dir.string());
  line("output", output.string());
  if (dataset) line("dataset", dataset->string());
  for (const auto& m : gp_models) line("gp-model", m.string());
  if (depth_dir) line("depth-dir", depth_dir->string());
  line("key-frames", std::to_string(key_frames));
  line("kernel", std::string(to_string(kernel.family)));
  line("nu", num(kernel.nu));
  line("beta", num(sampling.beta));
  line("angular-resolution", std::to_string(sampling.angular_resolution));
  line("sample-in-disk", sampling.on_boundary ? "false" : "true");
  line("filter-quantile", num(filter.quantile));
  line("iterations", std::to_string(train.iterations));
  line("learning-rate", num(train.learning_rate));
  line("l2-weight", num(train.l2_weight));
  line("max-train-points", std::to_string(train.max_train_points));
  line("train-fraction", num(train_fraction));
  line("seed", std::to_string(seed));
  line("ascii-ply", ply_binary ? "false" : "true");
  return t;
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::InvalidArgument,
                  path.filename().string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Densify SfM point clouds with multi-output Gaussian processes", "gpgs"};
  app.require_subcommand(1);

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  const std::map<std::string, std::string> help{
      {"model-dir", "COLMAP text model directory"},
      {"dataset", "dataset CSV to train or evaluate on"},
      {"output", "output directory (default gpgs_out)"},
      {"depth-dir", "directory of <image stem>.pfm depth maps"},
      {"key-frames", "number of key frames (default 1)"},
      {"kernel", "matern or rbf (default matern)"},
      {"nu", "Matern smoothness 0.5, 1.5 or 2.5 (default 0.5)"},
      {"beta", "sampling radius as a fraction of min(W, H) (default 0.25)"},
      {"angular-resolution", "samples per training pixel (default 8)"},
      {"filter-quantile", "fraction of lowest-variance predictions kept (default 0.75)"},
      {"iterations", "gradient steps per output (default 1000)"},
      {"learning-rate", "gradient step size (default 0.01)"},
      {"l2-weight", "L2 weight on the log-parameters (default 1e-6)"},
      {"max-train-points", "subsample cap, 0 for none (default 2000)"},
      {"train-fraction", "train share of the evaluation split (default 0.8)"},
      {"seed", "random seed (default 0, or GPGS_SEED)"}};
  for (const auto& key : RunConfig::keys()) {
    if (key == "ascii-ply" || key == "sample-in-disk" || key == "gp-model") continue;
    options[key] = app.add_option("--" + key, values[key], help.at(key));
  }
  std::vector<std::string> gp_models;
  options["gp-model"] = app.add_option("--gp-model", gp_models, "trained model file (repeatable)");
  bool ascii = false, in_disk = false;
  options["ascii-ply"] = app.add_flag("--ascii-ply", ascii, "write ASCII instead of binary PLY");
  options["sample-in-disk"] = app.add_flag("--sample-in-disk", in_disk, "sample radii uniformly in (0, r]");
  std::string config_path;
  app.add_option("--config", config_path, "file of 'key = value' lines");

  const std::map<std::string, std::string> descriptions{
      {"build-dataset", "extract the pixel-to-point dataset of the key frames"},
      {"train", "fit the six-output GP to a dataset"},
      {"densify", "sample, predict, filter and merge into a PLY"},
      {"evaluate", "held-out accuracy on a train/test split"},
      {"pipeline", "build-dataset, train, densify and evaluate in sequence"}};
  for (const auto& [name, help] : descriptions) app.add_subcommand(name, help)->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kSuccess;
    }
    err << "gpgs: " << e.what() << '\n';
    return kUsage;
  }

  try {
    RunConfig cfg;
    if (const char* env = std::getenv("GPGS_SEED"); env && *env) cfg.set("seed", env);
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      if (key == "ascii-ply")
        cfg.ply_binary = !ascii;
      else if (key == "sample-in-disk")
        cfg.sampling.on_boundary = !in_disk;
      else if (key == "gp-model") {
        cfg.gp_models.clear();
        for (const auto& m : gp_models) cfg.set(key, m);
      } else
        cfg.set(key, values[key]);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "build-dataset") return cmd_build_dataset(cfg, out);
    if (command == "train") return cmd_train(cfg, out);
    if (command == "densify") return cmd_densify(cfg, out);
    if (command == "evaluate") return cmd_evaluate(cfg, out, err);
    return cmd_pipeline(cfg, out, err);
  } catch (const Error& e) {
    err << "gpgs: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "gpgs: " << e.what() << '\n';
    return kInputData;
  }
}

}  // namespace gpgs::cli
