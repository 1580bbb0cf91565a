#include "gpgs/cloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "gpgs/error.hpp"

namespace gpgs {

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

bool is_float(ScalarType t) { return t == ScalarType::Float32 || t == ScalarType::Float64; }

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Format { Ascii, BinaryLittleEndian };

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
  }
  return v;
}

// Binary scalars are widened to double, except float32 which keeps its bit
// pattern through the double round trip.
double load_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::Int8: return load_le<std::int8_t>(p);
    case ScalarType::UInt8: return load_le<std::uint8_t>(p);
    case ScalarType::Int16: return load_le<std::int16_t>(p);
    case ScalarType::UInt16: return load_le<std::uint16_t>(p);
    case ScalarType::Int32: return load_le<std::int32_t>(p);
    case ScalarType::UInt32: return load_le<std::uint32_t>(p);
    case ScalarType::Float32: return load_le<float>(p);
    case ScalarType::Float64: return load_le<double>(p);
  }
  return 0.0;
}

std::uint8_t to_channel(double value, ScalarType t) {
  if (is_float(t)) value *= 255.0;
  return static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
}

template <typename T>
void put_le(std::string& out, T v) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

}  // namespace

std::size_t DensifiedCloud::count(PointSource source) const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [&](const CloudPoint& p) { return p.source == source; }));
}

void write_ply(const DensifiedCloud& cloud, const std::filesystem::path& path, bool binary) {
  for (const auto& p : cloud.points)
    for (float c : p.position)
      if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "non-finite point position");

  std::string out;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "comment source: 0 = SfM, 1 = GP prediction\n";
  out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "property uchar source\n";
  out += "end_header\n";

  if (binary) {
    out.reserve(out.size() + cloud.points.size() * 16);
    for (const auto& p : cloud.points) {
      for (float c : p.position) put_le(out, c);
      for (auto c : p.color) out.push_back(static_cast<char>(c));
      out.push_back(static_cast<char>(p.source));
    }
  } else {
    char buf[96];
    for (const auto& p : cloud.points) {
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u %u %u %u\n", p.position[0], p.position[1], p.position[2],
                    p.color[0], p.color[1], p.color[2], static_cast<unsigned>(p.source));
      out += buf;
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

DensifiedCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  const std::string where = path.string();

  std::string line;
  auto header_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!header_line() || line != "ply") throw Error(ErrorKind::IoFailure, where + ": missing 'ply' magic");

  std::optional<Format> format;
  std::vector<Element> elements;
  bool ended = false;
  while (header_line()) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "format") {
      std::string kind, version;
      ss >> kind >> version;
      if (kind == "ascii")
        format = Format::Ascii;
      else if (kind == "binary_little_endian")
        format = Format::BinaryLittleEndian;
      else
        throw Error(ErrorKind::UnsupportedProperty, where + ": unsupported format '" + kind + "'");
    } else if (key == "element") {
      Element e;
      ss >> e.name >> e.count;
      if (ss.fail()) throw Error(ErrorKind::IoFailure, where + ": bad element line '" + line + "'");
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) throw Error(ErrorKind::IoFailure, where + ": property before any element");
      Property p;
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ss >> count_type >> item_type >> p.name;
        auto ct = parse_type(count_type);
        auto it = parse_type(item_type);
        if (!ct || !it || is_float(*ct))
          throw Error(ErrorKind::UnsupportedProperty, where + ": bad list property '" + line + "'");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
      } else {
        auto t = parse_type(type);
        ss >> p.name;
        if (!t) throw Error(ErrorKind::UnsupportedProperty, where + ": unknown property type '" + type + "'");
        p.type = *t;
      }
      elements.back().properties.push_back(p);
    } else if (key == "end_header") {
      ended = true;
      break;
    } else if (key == "comment" || key == "obj_info" || key.empty()) {
      continue;
    } else {
      throw Error(ErrorKind::IoFailure, where + ": unexpected header line '" + line + "'");
    }
  }
  if (!ended || !format) throw Error(ErrorKind::IoFailure, where + ": incomplete header");

  auto vertex_it = std::find_if(elements.begin(), elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw Error(ErrorKind::IoFailure, where + ": no vertex element");
  for (const auto& p : vertex_it->properties)
    if (p.is_list) throw Error(ErrorKind::UnsupportedProperty, where + ": list property '" + p.name + "' on vertex");

  auto index_of = [&](const char* name) -> int {
    const auto& props = vertex_it->properties;
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i].name == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorKind::UnsupportedProperty, where + ": vertex lacks x/y/z");
  const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue"), isrc = index_of("source");

  const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::istringstream ascii(*format == Format::Ascii ? payload : std::string());

  auto truncated = [&] { return Error(ErrorKind::IoFailure, where + ": truncated vertex data"); };
  auto read_value = [&](ScalarType t) -> double {
    if (*format == Format::Ascii) {
      std::string tok;
      if (!(ascii >> tok)) throw truncated();
      try {
        return std::stod(tok);
      } catch (const std::exception&) {
        throw Error(ErrorKind::IoFailure, where + ": bad number '" + tok + "'");
      }
    }
    const auto size = type_size(t);
    if (payload.size() - pos < size) throw truncated();
    const double v = load_scalar(t, payload.data() + pos);
    pos += size;
    return v;
  };

  DensifiedCloud cloud;
  std::vector<double> row;
  for (auto e = elements.begin(); e != elements.end(); ++e) {
    if (e == vertex_it) {
      cloud.points.reserve(e->count);
      row.resize(e->properties.size());
      for (std::size_t n = 0; n < e->count; ++n) {
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = read_value(e->properties[i].type);
        CloudPoint p;
        p.position = {static_cast<float>(row[ix]), static_cast<float>(row[iy]), static_cast<float>(row[iz])};
        if (ir >= 0) p.color[0] = to_channel(row[ir], e->properties[ir].type);
        if (ig >= 0) p.color[1] = to_channel(row[ig], e->properties[ig].type);
        if (ib >= 0) p.color[2] = to_channel(row[ib], e->properties[ib].type);
        if (isrc >= 0) p.source = row[isrc] != 0.0 ? PointSource::GP : PointSource::SfM;
        cloud.points.push_back(p);
      }
      break;
    }
    // Skip elements that precede the vertex block.
    for (std::size_t n = 0; n < e->count; ++n) {
      if (*format == Format::Ascii) {
        std::string skipped;
        std::getline(ascii >> std::ws, skipped);
        continue;
      }
      for (const auto& p : e->properties) {
        const auto items = p.is_list ? static_cast<std::size_t>(read_value(p.count_type)) : 1;
        for (std::size_t k = 0; k < items; ++k) read_value(p.type);
      }
    }
  }
  return cloud;
}

}  // namespace gpgs
