#pragma once

#include <span>

#include "wgain/tensor.hpp"

namespace wgain::kernels {

/// Shape of a 2-D convolution over a C x H x W input with square kernels.
/// Weights are laid out [out_c][in_c][kernel][kernel].
struct ConvGeometry {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0;
  int kernel = 1, stride = 1, pad = 0, dilation = 1;

  int out_h() const { return (in_h + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1; }
  std::size_t in_size() const { return static_cast<std::size_t>(in_c) * in_h * in_w; }
  std::size_t out_size() const { return static_cast<std::size_t>(out_c) * out_h() * out_w(); }
  std::size_t weight_size() const {
    return static_cast<std::size_t>(out_c) * in_c * kernel * kernel;
  }

  /// Stride-1 geometry whose output has the input's spatial size.
  static ConvGeometry same(int in_c, int h, int w, int out_c, int kernel, int dilation) {
    return {in_c, h, w, out_c, kernel, 1, dilation * (kernel - 1) / 2, dilation};
  }
};

// im2col + GEMM kernels, OpenMP-parallel over channel rows.

/// out = conv(in, weight) + bias. `out` is overwritten; `bias` may be empty.
void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out);
/// grad_in += d(out)/d(in)^T grad_out.
void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in);
/// grad_weight += grad_out (x) in; grad_bias += spatial sums of grad_out (skipped if empty).
void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias);

/// Serial direct-loop versions of the kernels above, used as test oracles and
/// as the benchmark baseline.
namespace reference {
void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias);
}  // namespace reference

}  // namespace wgain::kernels
