#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace wgain {

using Real = double;

/// Dense channel-major (C x H x W) array of reals.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, Real fill = Real(0))
      : c_(channels), h_(height), w_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {}

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(int c, int y, int x) { return data_[index(c, y, x)]; }
  Real operator()(int c, int y, int x) const { return data_[index(c, y, x)]; }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real* raw() { return data_.data(); }
  const Real* raw() const { return data_.data(); }

  /// Contiguous view over channels [first, first + count).
  std::span<Real> channels_view(int first, int count) {
    return std::span<Real>(data_).subspan(first * plane(), count * plane());
  }
  std::span<const Real> channels_view(int first, int count) const {
    return std::span<const Real>(data_).subspan(first * plane(), count * plane());
  }

  bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    assert(c >= 0 && c < c_ && y >= 0 && y < h_ && x >= 0 && x < w_);
    return (static_cast<std::size_t>(c) * h_ + y) * w_ + x;
  }

  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<Real> data_;
};

/// Three-channel RGB image. Preprocessed images hold values in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, Real fill = Real(0)) : t_(3, height, width, fill) {}
  /// Adopts a tensor; it must have exactly three channels.
  explicit ImageTensor(Tensor t);

  int height() const { return t_.height(); }
  int width() const { return t_.width(); }
  std::size_t size() const { return t_.size(); }

  Real& operator()(int c, int y, int x) { return t_(c, y, x); }
  Real operator()(int c, int y, int x) const { return t_(c, y, x); }
  Real& operator[](std::size_t i) { return t_[i]; }
  Real operator[](std::size_t i) const { return t_[i]; }

  const Tensor& tensor() const { return t_; }
  Tensor& tensor() { return t_; }
  std::span<const Real> data() const { return t_.data(); }
  std::span<Real> data() { return t_.data(); }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  Tensor t_;
};

/// I.i.d. Normal(0, sigma^2) noise with the shape of an image.
struct NoiseTensor {
  Tensor values;
  Real sigma = Real(0);

  int height() const { return values.height(); }
  int width() const { return values.width(); }
};

}  // namespace wgain
