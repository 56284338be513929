#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wgain/mask.hpp"
#include "wgain/tensor.hpp"

namespace wgain {

/// Decoded raster, interleaved samples in R, G, B(, A) or gray order.
struct Raster {
  int height = 0, width = 0, channels = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;

  std::uint16_t at(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

Raster decode_raster(std::span<const std::uint8_t> bytes);
Raster read_raster(const std::filesystem::path& path);

/// Center crop to the largest square, grayscale -> RGB, alpha dropped, scale
/// by the bit-depth maximum, bilinear resize to target_side.
ImageTensor preprocess_image(const Raster& raw, int target_side);
/// Same conversion without cropping or resizing.
ImageTensor raster_to_image(const Raster& raw);

/// 8-bit RGB PNG; values are clamped to [0,1] and rounded to the nearest level.
std::vector<std::uint8_t> encode_png(const ImageTensor& img);
void write_png(const std::filesystem::path& path, const ImageTensor& img);

/// Single-channel PNG: 0 = missing, 255 = valid.
std::vector<std::uint8_t> encode_mask_png(const MaskMatrix& m);
/// Any decodable raster; pixels with first-channel value >= half scale are valid.
MaskMatrix decode_mask(std::span<const std::uint8_t> bytes);
MaskMatrix read_mask(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const MaskMatrix& m);

/// Center crop to a square and nearest-neighbour resize.
MaskMatrix resize_mask(const MaskMatrix& m, int target_side);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace wgain
