#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gpgs/error.hpp"
#include "gpgs/gp.hpp"

namespace gpgs {

namespace {

constexpr const char* kMagic = "gpgs-model v1";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class ModelReader {
 public:
  explicit ModelReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  }

  std::string line() {
    std::string l;
    if (!std::getline(in_, l)) fail("unexpected end of file");
    ++line_no_;
    return l;
  }

  // Reads "<key> <value>" and returns the value text.
  std::string field(const std::string& key) {
    const auto l = line();
    if (l.rfind(key + " ", 0) != 0) fail("expected '" + key + "'");
    return l.substr(key.size() + 1);
  }

  double number(const std::string& key) { return to_double(field(key)); }

  long integer(const std::string& key) {
    const auto text = field(key);
    try {
      std::size_t used = 0;
      const long v = std::stol(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad integer '" + text + "'");
  }

  double to_double(const std::string& text) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad number '" + text + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::MalformedLine, path_.filename().string() + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_model(const TrainedGP& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << kMagic << '\n';
  out << "image_id " << model.image_id << '\n';
  out << "width " << model.width << '\n';
  out << "height " << model.height << '\n';
  out << "input_dim " << model.input_dim() << '\n';
  out << "train_points " << model.train_size() << '\n';
  const auto& norm = model.normalizer();
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    const auto& om = model.output(o);
    out << "output " << kOutputNames[o] << '\n';
    out << "family " << to_string(om.kernel.family) << '\n';
    out << "nu " << num(om.kernel.nu) << '\n';
    out << "log_signal_var " << num(om.kernel.log_signal_var) << '\n';
    out << "log_lengthscale " << num(om.kernel.log_lengthscale) << '\n';
    out << "log_noise_var " << num(om.kernel.log_noise_var) << '\n';
    out << "jitter " << num(om.jitter) << '\n';
    out << "mean " << num(norm.mean[o]) << '\n';
    out << "std " << num(norm.stddev[o]) << '\n';
    out << "initial_loss " << num(om.initial_loss) << '\n';
    out << "final_loss " << num(om.final_loss) << '\n';
  }
  out << "data\n";
  const auto& X = model.inputs();
  const auto& Y = model.normalized_targets();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::string row;
    for (Eigen::Index c = 0; c < X.cols(); ++c) row += (row.empty() ? "" : " ") + num(X(i, c));
    for (Eigen::Index c = 0; c < Y.cols(); ++c) row += " " + num(Y(i, c));
    out << row << '\n';
  }
  out << "end\n";
  if (!out) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

TrainedGP load_model(const std::filesystem::path& path) {
  ModelReader r(path);
  if (r.line() != kMagic) r.fail(std::string("expected header '") + kMagic + "'");
  const auto image_id = r.integer("image_id");
  const auto width = r.integer("width");
  const auto height = r.integer("height");
  const auto dim = r.integer("input_dim");
  const auto n = r.integer("train_points");
  if (dim != 2 && dim != 3) r.fail("input_dim must be 2 or 3");
  if (n < 1) r.fail("train_points must be positive");
  if (width < 1 || height < 1 || image_id < 0) r.fail("bad image header");

  std::array<KernelConfig, kOutputCount> kernels;
  std::array<double, kOutputCount> jitters{};
  std::array<double, kOutputCount> initial{}, final{};
  OutputNormalizer norm;
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    if (r.field("output") != kOutputNames[o]) r.fail(std::string("expected output ") + kOutputNames[o]);
    try {
      kernels[o].family = parse_kernel_family(r.field("family"));
    } catch (const Error&) {
      r.fail("unknown kernel family");
    }
    kernels[o].nu = r.number("nu");
    kernels[o].log_signal_var = r.number("log_signal_var");
    kernels[o].log_lengthscale = r.number("log_lengthscale");
    kernels[o].log_noise_var = r.number("log_noise_var");
    jitters[o] = r.number("jitter");
    norm.mean[o] = r.number("mean");
    norm.stddev[o] = r.number("std");
    initial[o] = r.number("initial_loss");
    final[o] = r.number("final_loss");
    if (!(norm.stddev[o] > 0.0)) r.fail("std must be positive");
  }
  if (r.line() != "data") r.fail("expected 'data'");

  Eigen::MatrixXd X(n, dim);
  Eigen::MatrixXd Y(n, static_cast<Eigen::Index>(kOutputCount));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::istringstream row(r.line());
    std::string tok;
    Eigen::Index c = 0;
    while (row >> tok) {
      if (c >= dim + static_cast<Eigen::Index>(kOutputCount)) r.fail("too many columns");
      const double v = r.to_double(tok);
      if (c < dim)
        X(i, c) = v;
      else
        Y(i, c - dim) = v;
      ++c;
    }
    if (c != dim + static_cast<Eigen::Index>(kOutputCount)) r.fail("too few columns");
  }
  if (r.line() != "end") r.fail("expected 'end'");

  TrainedGP gp = TrainedGP::condition(std::move(X), std::move(Y), norm, kernels, jitters);
  gp.image_id = static_cast<ImageId>(image_id);
  gp.width = static_cast<int>(width);
  gp.height = static_cast<int>(height);
  for (std::size_t o = 0; o < kOutputCount; ++o) {
    gp.output(o).initial_loss = initial[o];
    gp.output(o).final_loss = final[o];
  }
  return gp;
}

}  // namespace gpgs
