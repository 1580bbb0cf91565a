#include "gpgs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "gpgs/error.hpp"
#include "gpgs/rng.hpp"

namespace gpgs {

namespace {

std::string format_row(const Sample& s) {
  std::string row;
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!row.empty()) row += ',';
    row += buf;
  };
  put(s.input.u_norm);
  put(s.input.v_norm);
  if (s.input.depth) put(*s.input.depth);
  for (double t : s.target) put(t);
  return row;
}

}  // namespace

PixelToPointDataset build_pixel_dataset(const SparseModel& model, ImageId image_id, const DepthMap* depth) {
  const ImageRecord* image = model.find_image(image_id);
  if (!image) throw Error(ErrorKind::UnknownImage, "image " + std::to_string(image_id) + " not in model");
  const CameraIntrinsics* camera = model.find_camera(image->camera_id);
  if (!camera)
    throw Error(ErrorKind::DanglingReference, "image " + std::to_string(image_id) + " cites a missing camera");
  if (depth && (depth->width != camera->width || depth->height != camera->height))
    throw Error(ErrorKind::DimensionMismatch, "depth map is " + std::to_string(depth->width) + "x" +
                                                  std::to_string(depth->height) + ", camera is " +
                                                  std::to_string(camera->width) + "x" +
                                                  std::to_string(camera->height));

  PixelToPointDataset ds;
  ds.image_id = image_id;
  ds.width = camera->width;
  ds.height = camera->height;

  const double w = camera->width;
  const double h = camera->height;
  std::set<std::pair<std::pair<double, double>, TargetVector>> seen;
  for (const auto& f : image->features) {
    if (!f.point3d_id) continue;
    const Point3D* p = model.find_point(*f.point3d_id);
    if (!p) throw Error(ErrorKind::DanglingReference, "feature cites missing point3d " + std::to_string(*f.point3d_id));

    Sample s;
    s.input.u_norm = std::clamp(f.u / w, 0.0, 1.0);
    s.input.v_norm = std::clamp(f.v / h, 0.0, 1.0);
    if (depth) {
      s.input.depth = depth->nearest(f.u, f.v);
      if (!s.input.depth) continue;
    }
    s.target = {p->position[0], p->position[1], p->position[2],
                p->color[0] / 255.0, p->color[1] / 255.0, p->color[2] / 255.0};
    if (!seen.insert({{s.input.u_norm, s.input.v_norm}, s.target}).second) continue;
    ds.samples.push_back(s);
  }
  return ds;
}

DatasetSplit split_dataset(const PixelToPointDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0, 1)");
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "cannot split an empty dataset");

  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  DatasetSplit split;
  split.train = PixelToPointDataset{ds.image_id, ds.width, ds.height, {}};
  split.test = split.train;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? split.train : split.test).samples.push_back(ds.samples[order[i]]);
  split.degenerate = split.train.empty() || split.test.empty();
  return split;
}

void write_dataset_csv(const PixelToPointDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "# image_id=" << ds.image_id << " width=" << ds.width << " height=" << ds.height << '\n';
  out << (ds.has_depth() ? "u_norm,v_norm,depth,x,y,z,r,g,b\n" : "u_norm,v_norm,x,y,z,r,g,b\n");
  for (const auto& s : ds.samples) out << format_row(s) << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

PixelToPointDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  const std::string where = path.filename().string();

  PixelToPointDataset ds;
  std::string line;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# image_id=%u width=%d height=%d", &ds.image_id, &ds.width, &ds.height) != 3)
    throw Error(ErrorKind::MalformedLine, where + ":1: expected '# image_id=.. width=.. height=..'");
  if (ds.width <= 0 || ds.height <= 0) throw Error(ErrorKind::MalformedLine, where + ":1: non-positive image size");

  if (!std::getline(in, line)) throw Error(ErrorKind::MalformedLine, where + ":2: missing column header");
  bool with_depth;
  if (line == "u_norm,v_norm,x,y,z,r,g,b")
    with_depth = false;
  else if (line == "u_norm,v_norm,depth,x,y,z,r,g,b")
    with_depth = true;
  else
    throw Error(ErrorKind::MalformedLine, where + ":2: unexpected column header '" + line + "'");

  const std::size_t columns = with_depth ? 9 : 8;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    try {
      while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      }
    } catch (const std::exception&) {
      throw Error(ErrorKind::MalformedLine, where + ":" + std::to_string(line_no) + ": bad number");
    }
    if (values.size() != columns)
      throw Error(ErrorKind::MalformedLine,
                  where + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) + " columns");
    Sample s;
    s.input.u_norm = values[0];
    s.input.v_norm = values[1];
    std::size_t k = 2;
    if (with_depth) s.input.depth = values[k++];
    for (std::size_t o = 0; o < kOutputCount; ++o) s.target[o] = values[k + o];
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace gpgs
