#include "wgain/biharmonic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <spdlog/spdlog.h>

#include "wgain/errors.hpp"
#include "wgain/parallel.hpp"

namespace wgain {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Tap {
  int y, x;
  double w;
};

// Stencil of the L row centred at (y, x). Returns the number of taps.
int row_stencil(int h, int w, int y, int x, std::array<Tap, 5>& taps) {
  const bool top = y == 0, bottom = y == h - 1, left = x == 0, right = x == w - 1;
  if (!top && !bottom && !left && !right) {
    taps = {Tap{y, x, -4.0}, Tap{y - 1, x, 1.0}, Tap{y + 1, x, 1.0}, Tap{y, x - 1, 1.0}, Tap{y, x + 1, 1.0}};
    return 5;
  }
  if ((top || bottom) && !left && !right) {
    taps[0] = {y, x - 1, 1.0};
    taps[1] = {y, x, -2.0};
    taps[2] = {y, x + 1, 1.0};
    return 3;
  }
  if ((left || right) && !top && !bottom) {
    taps[0] = {y - 1, x, 1.0};
    taps[1] = {y, x, -2.0};
    taps[2] = {y + 1, x, 1.0};
    return 3;
  }
  // Corner: mixed difference over the 2x2 block containing it.
  const int dy = top ? 1 : -1, dx = left ? 1 : -1;
  taps[0] = {y, x, 1.0};
  taps[1] = {y + dy, x, -1.0};
  taps[2] = {y, x + dx, -1.0};
  taps[3] = {y + dy, x + dx, 1.0};
  return 4;
}

// Labels 8-connected components of the 3x3-dilated missing set; returns, per
// component, the missing pixels it owns (row-major indices).
std::vector<std::vector<int>> missing_components(const MaskMatrix& m) {
  const int h = m.height(), w = m.width();
  std::vector<std::uint8_t> dilated(static_cast<std::size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!m(y, x))
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w) dilated[static_cast<std::size_t>(yy) * w + xx] = 1;
          }
  std::vector<int> label(dilated.size(), -1);
  std::vector<std::vector<int>> comps;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (!dilated[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    stack.assign(1, start);
    label[start] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w, x = p % w;
      if (!m(y, x)) comps[id].push_back(p);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          const int q = yy * w + xx;
          if (dilated[q] && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
    }
    std::sort(comps[id].begin(), comps[id].end());
  }
  return comps;
}

struct System {
  SpMat a;
  Eigen::MatrixXd b;  // one column per channel
};

System biharmonic_system(const ImageTensor& img, const MaskMatrix& m, const std::vector<int>& unknowns,
                         std::vector<int>& index) {
  const int h = m.height(), w = m.width();
  const std::size_t plane = m.size();
  for (std::size_t i = 0; i < unknowns.size(); ++i) index[unknowns[i]] = static_cast<int>(i);

  // Candidate row centres: every pixel within Chebyshev distance 1 of an unknown.
  std::vector<int> centres;
  for (int p : unknowns) {
    const int y = p / w, x = p % w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = y + dy, xx = x + dx;
        if (yy >= 0 && yy < h && xx >= 0 && xx < w) centres.push_back(yy * w + xx);
      }
  }
  std::sort(centres.begin(), centres.end());
  centres.erase(std::unique(centres.begin(), centres.end()), centres.end());

  std::vector<Triplet> lu;
  std::vector<std::array<double, 3>> known_part;
  std::array<Tap, 5> taps;
  int row = 0;
  for (int c : centres) {
    const int n = row_stencil(h, w, c / w, c % w, taps);
    std::array<double, 3> k{0, 0, 0};
    bool touches = false;
    for (int t = 0; t < n; ++t) {
      const int q = taps[t].y * w + taps[t].x;
      if (!m.valid(q)) {
        touches = true;
        lu.emplace_back(row, index[q], taps[t].w);
      } else {
        for (int ch = 0; ch < 3; ++ch) k[ch] += taps[t].w * img[ch * plane + q];
      }
    }
    if (!touches) continue;
    known_part.push_back(k);
    ++row;
  }
  SpMat l(row, static_cast<Eigen::Index>(unknowns.size()));
  l.setFromTriplets(lu.begin(), lu.end());
  Eigen::MatrixXd kp(row, 3);
  for (int r = 0; r < row; ++r)
    for (int ch = 0; ch < 3; ++ch) kp(r, ch) = known_part[r][ch];
  System s;
  s.a = SpMat(l.transpose() * l);
  s.b = -(l.transpose() * kp);
  return s;
}

System harmonic_system(const ImageTensor& img, const MaskMatrix& m, const std::vector<int>& unknowns,
                       std::vector<int>& index) {
  const int h = m.height(), w = m.width();
  const std::size_t plane = m.size();
  for (std::size_t i = 0; i < unknowns.size(); ++i) index[unknowns[i]] = static_cast<int>(i);
  std::vector<Triplet> t;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(unknowns.size()), 3);
  for (std::size_t i = 0; i < unknowns.size(); ++i) {
    const int y = unknowns[i] / w, x = unknowns[i] % w;
    int degree = 0;
    const int ny[4] = {y - 1, y + 1, y, y}, nx[4] = {x, x, x - 1, x + 1};
    for (int k = 0; k < 4; ++k) {
      if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
      ++degree;
      const int q = ny[k] * w + nx[k];
      if (m.valid(q))
        for (int ch = 0; ch < 3; ++ch) b(static_cast<Eigen::Index>(i), ch) += img[ch * plane + q];
      else
        t.emplace_back(static_cast<int>(i), index[q], -1.0);
    }
    t.emplace_back(static_cast<int>(i), static_cast<int>(i), degree);
  }
  System s;
  s.a = SpMat(static_cast<Eigen::Index>(unknowns.size()), static_cast<Eigen::Index>(unknowns.size()));
  s.a.setFromTriplets(t.begin(), t.end());
  s.b = std::move(b);
  return s;
}

bool solve_direct(const System& s, Eigen::MatrixXd& x) {
  Eigen::SimplicialLDLT<SpMat> ldlt(s.a);
  if (ldlt.info() != Eigen::Success) return false;
  const auto d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0) || d.cwiseAbs().minCoeff() <= 1e-12 * dmax) return false;
  x = ldlt.solve(s.b);
  return ldlt.info() == Eigen::Success;
}

bool solve_iterative(const System& s, Eigen::MatrixXd& x) {
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(std::max<Eigen::Index>(2000, 4 * s.a.rows()));
  cg.compute(s.a);
  if (cg.info() != Eigen::Success) return false;
  x.resize(s.a.rows(), 3);
  for (int ch = 0; ch < 3; ++ch) {
    x.col(ch) = cg.solve(s.b.col(ch));
    if (cg.info() != Eigen::Success) return false;
  }
  return true;
}

bool acceptable(const System& s, const Eigen::MatrixXd& x) {
  if (!x.allFinite()) return false;
  const double res = (s.a * x - s.b).norm();
  return res <= 1e-6 * (s.b.norm() + s.a.norm() * x.norm()) + 1e-12;
}

void check_inputs(const ImageTensor& img, const MaskMatrix& m) {
  if (img.height() != m.height() || img.width() != m.width())
    throw ContractError("biharmonic_inpaint: image and mask sizes differ");
  if (m.missing_count() == m.size()) throw ValidationError("cannot inpaint an image with no valid pixels");
}

void write_back(ImageTensor& out, const std::vector<int>& unknowns, const Eigen::MatrixXd& x, std::size_t plane,
                bool clamp) {
  for (std::size_t i = 0; i < unknowns.size(); ++i)
    for (int ch = 0; ch < 3; ++ch) {
      double v = x(static_cast<Eigen::Index>(i), ch);
      if (clamp) v = std::clamp(v, 0.0, 1.0);
      out[ch * plane + unknowns[i]] = v;
    }
}

}  // namespace

ImageTensor biharmonic_inpaint(const ImageTensor& x_tilde, const MaskMatrix& m, const BiharmonicOptions& options,
                               BiharmonicStats* stats) {
  check_inputs(x_tilde, m);
  ImageTensor out = x_tilde;
  const auto comps = missing_components(m);
  const std::size_t plane = m.size();
  std::size_t fallbacks = 0, unknown_total = 0;
  std::mutex mu;
  const bool tiny = m.height() < 3 || m.width() < 3;

  parallel_for(static_cast<std::ptrdiff_t>(comps.size()), [&](std::ptrdiff_t ci) {
    const auto& unknowns = comps[ci];
    thread_local std::vector<int> index;
    if (index.size() != plane) index.assign(plane, -1);
    Eigen::MatrixXd x;
    bool ok = false;
    if (!tiny) {
      const System s = biharmonic_system(x_tilde, m, unknowns, index);
      ok = unknowns.size() <= options.direct_limit ? solve_direct(s, x) : solve_iterative(s, x);
      ok = ok && acceptable(s, x);
    }
    if (!ok) {
      const System s = harmonic_system(x_tilde, m, unknowns, index);
      if (!solve_direct(s, x)) throw NumericalFault("harmonic fallback failed to solve");
      std::lock_guard lock(mu);
      ++fallbacks;
    }
    write_back(out, unknowns, x, plane, options.clamp);
    for (int p : unknowns) index[p] = -1;
    std::lock_guard lock(mu);
    unknown_total += unknowns.size();
  });

  if (fallbacks > 0) spdlog::warn("biharmonic system singular for {} component(s); used harmonic fill", fallbacks);
  if (stats) *stats = {comps.size(), unknown_total, fallbacks};
  return out;
}

ImageTensor harmonic_inpaint(const ImageTensor& x_tilde, const MaskMatrix& m) {
  check_inputs(x_tilde, m);
  ImageTensor out = x_tilde;
  std::vector<int> unknowns;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m.valid(i)) unknowns.push_back(static_cast<int>(i));
  if (unknowns.empty()) return out;
  std::vector<int> index(m.size(), -1);
  const System s = harmonic_system(x_tilde, m, unknowns, index);
  Eigen::MatrixXd x;
  if (!solve_direct(s, x)) throw NumericalFault("harmonic system failed to solve");
  write_back(out, unknowns, x, m.size(), false);
  return out;
}

}  // namespace wgain
