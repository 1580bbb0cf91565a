#include "gpgs/depth.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "gpgs/error.hpp"

namespace gpgs {

namespace {

// Reads one whitespace-delimited header token starting at pos.
std::string header_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  const auto start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

}  // namespace

std::optional<double> DepthMap::nearest(double u, double v) const {
  if (width <= 0 || height <= 0) return std::nullopt;
  const auto col = std::clamp(static_cast<long>(std::floor(u)), 0L, static_cast<long>(width - 1));
  const auto row = std::clamp(static_cast<long>(std::floor(v)), 0L, static_cast<long>(height - 1));
  const float d = values[static_cast<std::size_t>(row) * width + col];
  if (!(d > 0.0f) || !std::isfinite(d)) return std::nullopt;
  return static_cast<double>(d);
}

DepthMap read_depth_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  const auto magic = header_token(bytes, pos);
  if (magic != "Pf") throw Error(ErrorKind::BadMagic, path.string() + ": expected 'Pf', found '" + magic + "'");

  DepthMap depth;
  const auto w = header_token(bytes, pos);
  const auto h = header_token(bytes, pos);
  try {
    std::size_t used = 0;
    depth.width = std::stoi(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
    depth.height = std::stoi(h, &used);
    if (used != h.size()) throw std::invalid_argument(h);
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadDims, path.string() + ": unreadable dimensions '" + w + " " + h + "'");
  }
  if (depth.width <= 0 || depth.height <= 0)
    throw Error(ErrorKind::BadDims, path.string() + ": non-positive dimensions");

  const auto scale_tok = header_token(bytes, pos);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadDims, path.string() + ": unreadable scale '" + scale_tok + "'");
  }
  if (scale == 0.0) throw Error(ErrorKind::BadDims, path.string() + ": zero scale");
  ++pos;  // single whitespace byte terminates the header

  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(depth.width) * static_cast<std::size_t>(depth.height);
  if (pos > bytes.size() || bytes.size() - pos < count * 4)
    throw Error(ErrorKind::TruncatedPayload,
                path.string() + ": expected " + std::to_string(count * 4) + " payload bytes");

  depth.values.resize(count);
  const bool swap = little != (std::endian::native == std::endian::little);
  for (int file_row = 0; file_row < depth.height; ++file_row) {
    const int row = depth.height - 1 - file_row;
    for (int col = 0; col < depth.width; ++col) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + pos + (static_cast<std::size_t>(file_row) * depth.width + col) * 4, 4);
      if (swap) raw = __builtin_bswap32(raw);
      float value = std::bit_cast<float>(raw);
      if (!std::isfinite(value)) value = DepthMap::kInvalid;
      depth.values[static_cast<std::size_t>(row) * depth.width + col] = value;
    }
  }
  return depth;
}

void write_depth_pfm(const DepthMap& depth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1.0\n";
  for (int row = depth.height - 1; row >= 0; --row) {
    for (int col = 0; col < depth.width; ++col) {
      auto raw = std::bit_cast<std::uint32_t>(depth.values[static_cast<std::size_t>(row) * depth.width + col]);
      if constexpr (std::endian::native != std::endian::little) raw = __builtin_bswap32(raw);
      out.write(reinterpret_cast<const char*>(&raw), 4);
    }
  }
  if (!out) throw Error(ErrorKind::IoFailure, "short write to " + path.string());
}

}  // namespace gpgs
