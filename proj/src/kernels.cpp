#include "wgain/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace wgain::kernels {
namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using ConstMapRow = Eigen::Map<const RowMat>;

std::vector<Real>& scratch(std::size_t n) {
  thread_local std::vector<Real> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

// Column matrix rows are (c, ky, kx); columns are output positions.
void im2col(const ConvGeometry& g, const Real* in, Real* col) {
  const int oh = g.out_h(), ow = g.out_w();
  const int k = g.kernel;
  const int rows = g.in_c * k * k;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int c = r / (k * k);
    const int ky = (r / k) % k;
    const int kx = r % k;
    const Real* plane = in + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    Real* dst = col + static_cast<std::size_t>(r) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * g.stride - g.pad + ky * g.dilation;
      Real* row = dst + static_cast<std::size_t>(oy) * ow;
      if (iy < 0 || iy >= g.in_h) {
        std::fill(row, row + ow, Real(0));
        continue;
      }
      const Real* src = plane + static_cast<std::size_t>(iy) * g.in_w;
      const int x_off = kx * g.dilation - g.pad;
      if (g.stride == 1) {
        // Valid ox range: 0 <= ox + x_off < in_w.
        const int lo = std::clamp(-x_off, 0, ow);
        const int hi = std::clamp(g.in_w - x_off, lo, ow);
        std::fill(row, row + lo, Real(0));
        std::copy(src + lo + x_off, src + hi + x_off, row + lo);
        std::fill(row + hi, row + ow, Real(0));
      } else {
        for (int ox = 0; ox < ow; ++ox) {
          const int ix = ox * g.stride + x_off;
          row[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : Real(0);
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const Real* col, Real* out) {
  const int oh = g.out_h(), ow = g.out_w();
  const int k = g.kernel;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.in_c; ++c) {
    Real* plane = out + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const int r = (c * k + ky) * k + kx;
        const Real* src = col + static_cast<std::size_t>(r) * oh * ow;
        const int x_off = kx * g.dilation - g.pad;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dilation;
          if (iy < 0 || iy >= g.in_h) continue;
          Real* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          const Real* row = src + static_cast<std::size_t>(oy) * ow;
          if (g.stride == 1) {
            const int lo = std::clamp(-x_off, 0, ow);
            const int hi = std::clamp(g.in_w - x_off, lo, ow);
            for (int ox = lo; ox < hi; ++ox) dst[ox + x_off] += row[ox];
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * g.stride + x_off;
              if (ix >= 0 && ix < g.in_w) dst[ix] += row[ox];
            }
          }
        }
      }
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out) {
  const Eigen::Index p = static_cast<Eigen::Index>(g.out_h()) * g.out_w();
  const Eigen::Index ckk = static_cast<Eigen::Index>(g.in_c) * g.kernel * g.kernel;
  auto& col = scratch(static_cast<std::size_t>(ckk * p));
  im2col(g, in.data(), col.data());
  MapRow y(out.data(), g.out_c, p);
  y.noalias() = ConstMapRow(weight.data(), g.out_c, ckk) * ConstMapRow(col.data(), ckk, p);
  if (!bias.empty())
    for (int o = 0; o < g.out_c; ++o) y.row(o).array() += bias[o];
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in) {
  const Eigen::Index p = static_cast<Eigen::Index>(g.out_h()) * g.out_w();
  const Eigen::Index ckk = static_cast<Eigen::Index>(g.in_c) * g.kernel * g.kernel;
  auto& col = scratch(static_cast<std::size_t>(ckk * p));
  MapRow dcol(col.data(), ckk, p);
  dcol.noalias() =
      ConstMapRow(weight.data(), g.out_c, ckk).transpose() * ConstMapRow(grad_out.data(), g.out_c, p);
  col2im_add(g, col.data(), grad_in.data());
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias) {
  const Eigen::Index p = static_cast<Eigen::Index>(g.out_h()) * g.out_w();
  const Eigen::Index ckk = static_cast<Eigen::Index>(g.in_c) * g.kernel * g.kernel;
  auto& col = scratch(static_cast<std::size_t>(ckk * p));
  im2col(g, in.data(), col.data());
  ConstMapRow gy(grad_out.data(), g.out_c, p);
  MapRow(grad_weight.data(), g.out_c, ckk).noalias() += gy * ConstMapRow(col.data(), ckk, p).transpose();
  // Plain loop: Eigen's vectorized sum() peels by address alignment, which
  // would make the result depend on where the buffer happens to live.
  if (!grad_bias.empty())
    for (int o = 0; o < g.out_c; ++o) {
      const Real* row = grad_out.data() + static_cast<std::size_t>(o) * p;
      Real s = 0;
      for (Eigen::Index i = 0; i < p; ++i) s += row[i];
      grad_bias[o] += s;
    }
}

}  // namespace wgain::kernels
