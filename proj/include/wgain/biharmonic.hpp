#pragma once

#include <cstddef>

#include "wgain/mask.hpp"
#include "wgain/tensor.hpp"

namespace wgain {

struct BiharmonicOptions {
  /// Clamp filled values to [0, 1].
  bool clamp = true;
  /// Components with more unknowns than this use preconditioned CG instead of LDL^T.
  std::size_t direct_limit = 10000;
};

struct BiharmonicStats {
  std::size_t components = 0;
  std::size_t unknowns = 0;
  std::size_t harmonic_fallbacks = 0;
};

/// Fills missing pixels with a discrete biharmonic extension of the valid ones.
///
/// The fill minimizes sum_r (L u)_r^2 over the missing values, where L stacks
/// 5-point Laplacians at interior pixels, second differences along the image
/// edges and mixed differences at the corners. Away from the border the
/// normal equations are the 13-point bilaplacian; affine images lie in the
/// null space of L and are therefore reproduced exactly. Each connected
/// component of the (3x3 dilated) missing set is solved independently, with
/// one factorization shared by the three channels. A singular component
/// falls back to a harmonic (4-neighbour Laplace) fill.
///
/// Throws ValidationError when no pixel is valid.
ImageTensor biharmonic_inpaint(const ImageTensor& x_tilde, const MaskMatrix& m,
                               const BiharmonicOptions& options = {}, BiharmonicStats* stats = nullptr);

/// Harmonic fill of every missing pixel; exposed for tests of the fallback.
ImageTensor harmonic_inpaint(const ImageTensor& x_tilde, const MaskMatrix& m);

}  // namespace wgain
