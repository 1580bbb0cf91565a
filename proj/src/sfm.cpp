#include "gpgs/sfm.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "gpgs/error.hpp"

namespace gpgs {

namespace {

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  }

  // Next line that is not a '#' comment. Blank lines are returned as-is.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] == '#') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::MalformedLine,
                path_.filename().string() + ":" + std::to_string(line_no_) + ": " + what);
  }

  std::size_t line_no() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

bool is_blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

template <typename T>
T parse_number(const LineReader& r, const std::string& tok, const char* field) {
  T value{};
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) r.fail(std::string("bad ") + field + " '" + tok + "'");
  return value;
}

std::vector<CameraIntrinsics> read_cameras(const std::filesystem::path& path) {
  LineReader r(path);
  std::vector<CameraIntrinsics> cameras;
  std::string line;
  while (r.next(line)) {
    if (is_blank(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() < 4) r.fail("expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS...");
    CameraIntrinsics cam;
    cam.id = parse_number<std::uint32_t>(r, tok[0], "camera id");
    cam.model = tok[1];
    cam.width = parse_number<int>(r, tok[2], "width");
    cam.height = parse_number<int>(r, tok[3], "height");
    if (cam.width <= 0 || cam.height <= 0) r.fail("non-positive image size");
    for (std::size_t i = 4; i < tok.size(); ++i) cam.params.push_back(parse_number<double>(r, tok[i], "parameter"));
    cameras.push_back(std::move(cam));
  }
  return cameras;
}

std::vector<ImageRecord> read_images(const std::filesystem::path& path) {
  LineReader r(path);
  std::vector<ImageRecord> images;
  std::string line;
  while (r.next(line)) {
    if (is_blank(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() < 10) r.fail("expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
    ImageRecord img;
    img.id = parse_number<ImageId>(r, tok[0], "image id");
    for (int i = 0; i < 4; ++i) img.qvec[i] = parse_number<double>(r, tok[1 + i], "quaternion");
    for (int i = 0; i < 3; ++i) img.tvec[i] = parse_number<double>(r, tok[5 + i], "translation");
    img.camera_id = parse_number<std::uint32_t>(r, tok[8], "camera id");
    // Names may contain spaces.
    const auto name_pos = [&] {
      std::size_t pos = 0;
      for (int field = 0; field < 9; ++field) {
        pos = line.find_first_not_of(" \t", pos);
        pos = line.find_first_of(" \t", pos);
      }
      return line.find_first_not_of(" \t", pos);
    }();
    img.name = line.substr(name_pos);
    while (!img.name.empty() && (img.name.back() == ' ' || img.name.back() == '\t')) img.name.pop_back();

    std::string points_line;
    if (!r.next(points_line)) points_line.clear();
    const auto pts = split_ws(points_line);
    if (pts.size() % 3 != 0) r.fail("keypoint line must hold X Y POINT3D_ID triples");
    img.features.reserve(pts.size() / 3);
    for (std::size_t i = 0; i < pts.size(); i += 3) {
      Feature f;
      f.u = parse_number<double>(r, pts[i], "keypoint x");
      f.v = parse_number<double>(r, pts[i + 1], "keypoint y");
      const auto pid = parse_number<std::int64_t>(r, pts[i + 2], "point3d id");
      if (pid < -1) r.fail("negative point3d id");
      if (pid >= 0) f.point3d_id = static_cast<Point3dId>(pid);
      img.features.push_back(f);
    }
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<Point3D> read_points(const std::filesystem::path& path) {
  LineReader r(path);
  std::vector<Point3D> points;
  std::string line;
  while (r.next(line)) {
    if (is_blank(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() < 8 || (tok.size() - 8) % 2 != 0)
      r.fail("expected POINT3D_ID X Y Z R G B ERROR followed by (IMAGE_ID, POINT2D_IDX) pairs");
    Point3D p;
    p.id = parse_number<Point3dId>(r, tok[0], "point3d id");
    for (int i = 0; i < 3; ++i) p.position[i] = parse_number<double>(r, tok[1 + i], "coordinate");
    for (int i = 0; i < 3; ++i) {
      const auto c = parse_number<int>(r, tok[4 + i], "colour");
      if (c < 0 || c > 255) r.fail("colour channel out of range");
      p.color[i] = static_cast<std::uint8_t>(c);
    }
    p.error = parse_number<double>(r, tok[7], "error");
    for (std::size_t i = 8; i < tok.size(); i += 2) {
      p.track.push_back({parse_number<ImageId>(r, tok[i], "track image id"),
                         parse_number<std::uint32_t>(r, tok[i + 1], "track keypoint index")});
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace

std::size_t ImageRecord::linked_feature_count() const {
  return static_cast<std::size_t>(
      std::count_if(features.begin(), features.end(), [](const Feature& f) { return f.point3d_id.has_value(); }));
}

const ImageRecord* SparseModel::find_image(ImageId id) const {
  auto it = std::find_if(images.begin(), images.end(), [&](const ImageRecord& i) { return i.id == id; });
  return it == images.end() ? nullptr : &*it;
}

const CameraIntrinsics* SparseModel::find_camera(std::uint32_t id) const {
  auto it = std::find_if(cameras.begin(), cameras.end(), [&](const CameraIntrinsics& c) { return c.id == id; });
  return it == cameras.end() ? nullptr : &*it;
}

const Point3D* SparseModel::find_point(Point3dId id) const {
  auto it = std::find_if(points3d.begin(), points3d.end(), [&](const Point3D& p) { return p.id == id; });
  return it == points3d.end() ? nullptr : &*it;
}

void SparseModel::validate() const {
  std::unordered_set<std::uint32_t> camera_ids;
  for (const auto& c : cameras)
    if (!camera_ids.insert(c.id).second)
      throw Error(ErrorKind::DuplicateId, "camera id " + std::to_string(c.id) + " appears twice");

  std::unordered_map<ImageId, const ImageRecord*> image_by_id;
  for (const auto& img : images) {
    if (!image_by_id.emplace(img.id, &img).second)
      throw Error(ErrorKind::DuplicateId, "image id " + std::to_string(img.id) + " appears twice");
    if (!camera_ids.contains(img.camera_id))
      throw Error(ErrorKind::DanglingReference,
                  "image " + std::to_string(img.id) + " cites missing camera " + std::to_string(img.camera_id));
  }

  std::unordered_set<Point3dId> point_ids;
  for (const auto& p : points3d) {
    if (!point_ids.insert(p.id).second)
      throw Error(ErrorKind::DuplicateId, "point3d id " + std::to_string(p.id) + " appears twice");
    for (const auto& t : p.track) {
      auto it = image_by_id.find(t.image_id);
      if (it == image_by_id.end())
        throw Error(ErrorKind::DanglingReference, "point3d " + std::to_string(p.id) + " track cites missing image " +
                                                      std::to_string(t.image_id));
      if (t.feature_index >= it->second->features.size())
        throw Error(ErrorKind::DanglingReference, "point3d " + std::to_string(p.id) + " track cites keypoint " +
                                                      std::to_string(t.feature_index) + " beyond image " +
                                                      std::to_string(t.image_id));
    }
  }

  for (const auto& img : images)
    for (const auto& f : img.features)
      if (f.point3d_id && !point_ids.contains(*f.point3d_id))
        throw Error(ErrorKind::DanglingReference, "image " + std::to_string(img.id) + " cites missing point3d " +
                                                      std::to_string(*f.point3d_id));
}

SparseModel parse_colmap_model(const std::filesystem::path& dir) {
  SparseModel model;
  model.cameras = read_cameras(dir / "cameras.txt");
  model.images = read_images(dir / "images.txt");
  model.points3d = read_points(dir / "points3D.txt");
  model.validate();
  return model;
}

std::vector<ImageId> select_key_frames(const SparseModel& model, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "key frame count must be at least 1");
  std::vector<std::pair<std::size_t, ImageId>> ranked;
  ranked.reserve(model.images.size());
  for (const auto& img : model.images) ranked.emplace_back(img.linked_feature_count(), img.id);
  if (std::none_of(ranked.begin(), ranked.end(), [](const auto& r) { return r.first > 0; }))
    throw Error(ErrorKind::NoCorrespondences, "no image has a feature linked to a 3D point");
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  ranked.resize(std::min(k, ranked.size()));
  std::vector<ImageId> ids;
  for (const auto& r : ranked) ids.push_back(r.second);
  return ids;
}

}  // namespace gpgs
