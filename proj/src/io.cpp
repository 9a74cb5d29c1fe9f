#include "svo/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "svo/error.hpp"

namespace svo {

namespace {

bool parse_double(std::string_view token, double& out) {
  const std::string s(token);
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && !s.empty() && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
  }
  return v;
}

}  // namespace

Trajectory parse_trajectory(std::string_view text) {
  Trajectory out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 8) {
      throw Error(ErrorCode::kParseError, where + ": expected 8 fields, found " +
                                              std::to_string(fields.size()));
    }
    double v[8];
    for (int k = 0; k < 8; ++k) {
      if (!parse_double(fields[k], v[k])) {
        throw Error(ErrorCode::kParseError, where + ": bad number '" + std::string(fields[k]) + "'");
      }
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (q.norm() < 1e-6) throw Error(ErrorCode::kParseError, where + ": zero quaternion");
    try {
      out.push_back(v[0], Pose(q, Vec3(v[1], v[2], v[3])));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.detail());
    }
    if (eol == text.size()) break;
  }
  return out;
}

std::string format_trajectory(const Trajectory& trajectory) {
  std::string out;
  char buf[256];
  for (const auto& e : trajectory.entries()) {
    const Vec3& t = e.pose.translation();
    const Eigen::Quaterniond& q = e.pose.rotation();
    std::snprintf(buf, sizeof buf, "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", e.stamp, t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out += buf;
  }
  return out;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  try {
    return parse_trajectory(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
  write_file(path, format_trajectory(trajectory));
}

Image decode_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::kMagicMismatch, "expected P5 or P6 header");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  int header[3];
  for (int k = 0; k < 3; ++k) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    long value = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1 << 20) break;
      ++pos;
    }
    if (pos == start || value <= 0 || value > 1 << 20) {
      throw Error(ErrorCode::kParseError, "bad header field " + std::to_string(k + 1) +
                                              " at byte " + std::to_string(start));
    }
    header[k] = static_cast<int>(value);
  }
  if (header[2] != 255) {
    throw Error(ErrorCode::kParseError, "maxval " + std::to_string(header[2]) + " (expected 255)");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::kParseError, "missing separator after header");
  }
  ++pos;
  const int w = header[0];
  const int h = header[1];
  const std::size_t expected = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos < expected) {
    throw Error(ErrorCode::kParseError, "pixel data truncated: expected " +
                                            std::to_string(expected) + " bytes, found " +
                                            std::to_string(bytes.size() - pos));
  }
  Image img(w, h, channels);
  for (std::size_t i = 0; i < expected; ++i) {
    img.data()[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i]));
  }
  return img;
}

std::string encode_pnm(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "only 1- or 3-channel images can be written");
  }
  std::string out = (image.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(image.width()) +
                    " " + std::to_string(image.height()) + "\n255\n";
  out.reserve(out.size() + image.data().size());
  for (float v : image.data()) {
    const float c = std::clamp(std::nearbyint(v), 0.0f, 255.0f);
    out.push_back(static_cast<char>(static_cast<unsigned char>(c)));
  }
  return out;
}

Image read_image(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_image(const Image& image, const std::filesystem::path& path) {
  write_file(path, encode_pnm(image));
}

FeatureMap decode_fmap(std::string_view bytes, int stride) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "FMAP") {
    throw Error(ErrorCode::kMagicMismatch, "missing FMAP magic");
  }
  if (bytes.size() < 16) {
    throw Error(ErrorCode::kParseError, "header truncated: expected 16 bytes, found " +
                                            std::to_string(bytes.size()));
  }
  const std::uint32_t h = get_u32(bytes, 4);
  const std::uint32_t w = get_u32(bytes, 8);
  const std::uint32_t c = get_u32(bytes, 12);
  const std::uint64_t count = static_cast<std::uint64_t>(h) * w * c;
  const std::uint64_t expected = count * 4;
  const std::uint64_t actual = bytes.size() - 16;
  if (actual != expected) {
    throw Error(ErrorCode::kParseError, "payload size mismatch: expected " +
                                            std::to_string(expected) + " bytes, found " +
                                            std::to_string(actual));
  }
  FeatureMap map(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), stride);
  for (std::uint64_t i = 0; i < count; ++i) {
    map.data()[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
  }
  return map;
}

std::string encode_fmap(const FeatureMap& map) {
  std::string out = "FMAP";
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.channels()));
  out.reserve(out.size() + 4 * map.data().size());
  for (float v : map.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureMap read_fmap(const std::filesystem::path& path, int stride) {
  try {
    return decode_fmap(read_file(path), stride);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) throw;
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_fmap(const FeatureMap& map, const std::filesystem::path& path) {
  write_file(path, encode_fmap(map));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace svo
