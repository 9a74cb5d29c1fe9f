#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "svo/correlation.hpp"
#include "svo/eval.hpp"
#include "svo/image.hpp"

namespace svo {

// TUM lines `timestamp tx ty tz qx qy qz qw`, `#` comments and blank lines
// skipped. Fields are written with 9 digits after the decimal point.
Trajectory parse_trajectory(std::string_view text);
std::string format_trajectory(const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

// Binary PGM (P5, one channel) and PPM (P6, three channels) with maxval 255.
// Writing rounds and clamps to 0..255.
Image decode_pnm(std::string_view bytes);
std::string encode_pnm(const Image& image);
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

// "FMAP", u32 LE height, width, channels, then f32 LE values (row-major,
// channel fastest). The stride is not stored.
FeatureMap decode_fmap(std::string_view bytes, int stride = 1);
std::string encode_fmap(const FeatureMap& map);
FeatureMap read_fmap(const std::filesystem::path& path, int stride = 1);
void write_fmap(const FeatureMap& map, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace svo
