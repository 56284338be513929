#include "wgain/kernels.hpp"

namespace wgain::kernels::reference {
namespace {

template <class Visit>
void for_each_tap(const ConvGeometry& g, Visit&& visit) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int o = 0; o < g.out_c; ++o)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int c = 0; c < g.in_c; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * g.stride - g.pad + ky * g.dilation;
              const int ix = ox * g.stride - g.pad + kx * g.dilation;
              if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
              const std::size_t out_i = (static_cast<std::size_t>(o) * oh + oy) * ow + ox;
              const std::size_t in_i = (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w + ix;
              const std::size_t w_i = ((static_cast<std::size_t>(o) * g.in_c + c) * k + ky) * k + kx;
              visit(out_i, in_i, w_i);
            }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out) {
  const std::size_t plane = static_cast<std::size_t>(g.out_h()) * g.out_w();
  for (int o = 0; o < g.out_c; ++o)
    for (std::size_t i = 0; i < plane; ++i) out[o * plane + i] = bias.empty() ? Real(0) : bias[o];
  for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t wi) { out[oi] += weight[wi] * in[ii]; });
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in) {
  for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t wi) {
    grad_in[ii] += weight[wi] * grad_out[oi];
  });
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias) {
  for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t wi) {
    grad_weight[wi] += in[ii] * grad_out[oi];
  });
  if (grad_bias.empty()) return;
  const std::size_t plane = static_cast<std::size_t>(g.out_h()) * g.out_w();
  for (int o = 0; o < g.out_c; ++o)
    for (std::size_t i = 0; i < plane; ++i) grad_bias[o] += grad_out[o * plane + i];
}

}  // namespace wgain::kernels::reference
