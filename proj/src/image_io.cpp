#include "wgain/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "wgain/errors.hpp"

namespace wgain {
namespace {

Raster from_mat(const cv::Mat& decoded) {
  if (decoded.empty()) throw IngestionError("image could not be decoded");
  cv::Mat m = decoded;
  if (m.depth() != CV_8U && m.depth() != CV_16U) m.convertTo(m, CV_8U);
  // OpenCV stores colour as BGR(A).
  if (m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
  else if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2RGBA);
  Raster r;
  r.height = m.rows;
  r.width = m.cols;
  r.channels = m.channels();
  r.bit_depth = m.depth() == CV_16U ? 16 : 8;
  r.samples.resize(static_cast<std::size_t>(r.height) * r.width * r.channels);
  std::size_t k = 0;
  for (int y = 0; y < m.rows; ++y) {
    if (r.bit_depth == 8) {
      const auto* row = m.ptr<std::uint8_t>(y);
      for (int i = 0; i < m.cols * r.channels; ++i) r.samples[k++] = row[i];
    } else {
      const auto* row = m.ptr<std::uint16_t>(y);
      for (int i = 0; i < m.cols * r.channels; ++i) r.samples[k++] = row[i];
    }
  }
  return r;
}

void check_raster(const Raster& raw) {
  if (raw.height <= 0 || raw.width <= 0) throw ValidationError("image has zero area");
  if (raw.channels != 1 && raw.channels != 3 && raw.channels != 4)
    throw ValidationError("image must have 1, 3 or 4 channels");
}

// RGB planes in [0,1] of the (y0, x0, side) window.
cv::Mat normalized_rgb(const Raster& raw, int y0, int x0, int h, int w) {
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  cv::Mat out(h, w, CV_64FC3);
  for (int y = 0; y < h; ++y) {
    auto* row = out.ptr<cv::Vec3d>(y);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) row[x][c] = raw.at(y0 + y, x0 + x, raw.channels == 1 ? 0 : c) / scale;
  }
  return out;
}

ImageTensor to_tensor(const cv::Mat& rgb) {
  ImageTensor img(rgb.rows, rgb.cols);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3d>(y);
    for (int x = 0; x < rgb.cols; ++x)
      for (int c = 0; c < 3; ++c) img(c, y, x) = std::clamp(row[x][c], 0.0, 1.0);
  }
  return img;
}

std::vector<std::uint8_t> encode(const cv::Mat& m) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", m, out)) throw IngestionError("PNG encoding failed");
  return out;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os || !os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw IngestionError("cannot write " + path.string());
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Raster decode_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw IngestionError("empty image payload");
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  return from_mat(cv::imdecode(buf, cv::IMREAD_UNCHANGED));
}

Raster read_raster(const std::filesystem::path& path) {
  try {
    return decode_raster(read_file(path));
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

ImageTensor preprocess_image(const Raster& raw, int target_side) {
  check_raster(raw);
  if (target_side <= 0) throw ValidationError("target side must be positive");
  const int side = std::min(raw.height, raw.width);
  const int y0 = (raw.height - side) / 2, x0 = (raw.width - side) / 2;
  cv::Mat rgb = normalized_rgb(raw, y0, x0, side, side);
  if (side != target_side) {
    cv::Mat resized;
    cv::resize(rgb, resized, cv::Size(target_side, target_side), 0, 0, cv::INTER_LINEAR);
    rgb = resized;
  }
  return to_tensor(rgb);
}

ImageTensor raster_to_image(const Raster& raw) {
  check_raster(raw);
  return to_tensor(normalized_rgb(raw, 0, 0, raw.height, raw.width));
}

std::vector<std::uint8_t> encode_png(const ImageTensor& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)  // BGR order on the OpenCV side
        row[x][2 - c] = static_cast<std::uint8_t>(std::lround(std::clamp(img(c, y, x), 0.0, 1.0) * 255.0));
  }
  return encode(m);
}

void write_png(const std::filesystem::path& path, const ImageTensor& img) { write_bytes(path, encode_png(img)); }

std::vector<std::uint8_t> encode_mask_png(const MaskMatrix& m) {
  cv::Mat out(m.height(), m.width(), CV_8UC1);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.at<std::uint8_t>(y, x) = m(y, x) ? 255 : 0;
  return encode(out);
}

MaskMatrix decode_mask(std::span<const std::uint8_t> bytes) {
  const Raster r = decode_raster(bytes);
  check_raster(r);
  const int half = r.bit_depth == 16 ? 32768 : 128;
  MaskMatrix m(r.height, r.width, 1);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) m.set(y, x, r.at(y, x, 0) >= half);
  return m;
}

MaskMatrix read_mask(const std::filesystem::path& path) {
  try {
    return decode_mask(read_file(path));
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

void write_mask_png(const std::filesystem::path& path, const MaskMatrix& m) { write_bytes(path, encode_mask_png(m)); }

MaskMatrix resize_mask(const MaskMatrix& m, int target_side) {
  const int side = std::min(m.height(), m.width());
  const int y0 = (m.height() - side) / 2, x0 = (m.width() - side) / 2;
  MaskMatrix out(target_side, target_side, 1);
  for (int y = 0; y < target_side; ++y)
    for (int x = 0; x < target_side; ++x) {
      const int sy = std::min(side - 1, static_cast<int>((y + 0.5) * side / target_side));
      const int sx = std::min(side - 1, static_cast<int>((x + 0.5) * side / target_side));
      out.set(y, x, m(y0 + sy, x0 + sx) != 0);
    }
  return out;
}

}  // namespace wgain
