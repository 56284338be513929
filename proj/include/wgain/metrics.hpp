#pragma once

#include <limits>

#include "wgain/mask.hpp"
#include "wgain/tensor.hpp"

namespace wgain {

/// 10 log10(1 / MSE) over all pixels and channels of [0,1] images.
/// Identical images give +infinity.
double psnr(const ImageTensor& x, const ImageTensor& y);

struct SsimParams {
  int window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
  /// Normalize window (co)variances by N-1 instead of N.
  bool sample_covariance = true;
};

/// Mean SSIM over all fully contained windows of each channel, then averaged
/// over channels. Uniform window; throws ValidationError when the image is
/// smaller than the window.
double ssim(const ImageTensor& x, const ImageTensor& y, const SsimParams& params = {});

struct PairMetrics {
  double psnr = 0;
  double ssim = 0;
  double missing_fraction = 0;
};

/// Full-frame metrics bundled with the mask's missing fraction.
PairMetrics evaluate_pair(const ImageTensor& truth, const ImageTensor& inpainted, const MaskMatrix& mask,
                          const SsimParams& params = {});

}  // namespace wgain
