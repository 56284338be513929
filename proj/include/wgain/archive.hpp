#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace wgain {

/// Named float64 array with an explicit shape.
struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

/// Binary container of named arrays. Layout (little-endian):
///   "WGAINARR" u32 version u32 count
///   per array: u32 name_len, name, u32 ndims, i64 dims[ndims], f64 data[prod(dims)]
void write_archive(const std::filesystem::path& path, std::span<const NamedArray> arrays);
std::vector<NamedArray> read_archive(const std::filesystem::path& path);

std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::span<const double> values);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace wgain
