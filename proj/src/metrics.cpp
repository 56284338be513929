#include "wgain/metrics.hpp"

#include <cmath>
#include <vector>

#include "wgain/errors.hpp"

namespace wgain {
namespace {

void check_pair(const ImageTensor& x, const ImageTensor& y) {
  if (!x.tensor().same_shape(y.tensor())) throw ContractError("metric inputs differ in shape");
}

// Summed-area table with a zero first row and column.
std::vector<double> integral(const double* plane, int h, int w) {
  std::vector<double> s(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0;
    for (int x = 0; x < w; ++x) {
      row += plane[static_cast<std::size_t>(y) * w + x];
      s[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] = s[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return s;
}

double box(const std::vector<double>& s, int w, int y, int x, int n) {
  const auto at = [&](int yy, int xx) { return s[static_cast<std::size_t>(yy) * (w + 1) + xx]; };
  return at(y + n, x + n) - at(y, x + n) - at(y + n, x) + at(y, x);
}

}  // namespace

double psnr(const ImageTensor& x, const ImageTensor& y) {
  check_pair(x, y);
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  if (sum == 0) return std::numeric_limits<double>::infinity();
  const double mse = sum / static_cast<double>(x.size());
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& x, const ImageTensor& y, const SsimParams& p) {
  check_pair(x, y);
  const int h = x.height(), w = x.width(), n = p.window;
  if (n < 1 || h < n || w < n) throw ValidationError("image is smaller than the SSIM window");
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  const double np = static_cast<double>(n) * n;
  const double cov_norm = p.sample_covariance && np > 1 ? np / (np - 1) : 1.0;
  const std::size_t plane = x.tensor().plane();

  double total = 0;
  std::vector<double> xx(plane), yy(plane), xy(plane);
  for (int c = 0; c < 3; ++c) {
    const double* a = x.tensor().raw() + c * plane;
    const double* b = y.tensor().raw() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = a[i] * a[i];
      yy[i] = b[i] * b[i];
      xy[i] = a[i] * b[i];
    }
    const auto sa = integral(a, h, w), sb = integral(b, h, w);
    const auto saa = integral(xx.data(), h, w), sbb = integral(yy.data(), h, w), sab = integral(xy.data(), h, w);
    double acc = 0;
    for (int wy = 0; wy + n <= h; ++wy)
      for (int wx = 0; wx + n <= w; ++wx) {
        const double ux = box(sa, w, wy, wx, n) / np, uy = box(sb, w, wy, wx, n) / np;
        const double vx = cov_norm * (box(saa, w, wy, wx, n) / np - ux * ux);
        const double vy = cov_norm * (box(sbb, w, wy, wx, n) / np - uy * uy);
        const double vxy = cov_norm * (box(sab, w, wy, wx, n) / np - ux * uy);
        acc += ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
      }
    total += acc / (static_cast<double>(h - n + 1) * (w - n + 1));
  }
  return total / 3.0;
}

PairMetrics evaluate_pair(const ImageTensor& truth, const ImageTensor& inpainted, const MaskMatrix& mask,
                          const SsimParams& params) {
  if (truth.height() != mask.height() || truth.width() != mask.width())
    throw ContractError("evaluate_pair: mask size differs from image size");
  return {psnr(truth, inpainted), ssim(truth, inpainted, params), missing_fraction(mask)};
}

}  // namespace wgain
