#include "wgain/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace wgain {

Real ParamTensor::l2_norm() const {
  Real s = 0;
  for (Real v : value) s += v * v;
  return std::sqrt(s);
}

std::size_t ParamSet::add(std::string name, std::vector<int> shape, bool is_weight) {
  const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  tensors_.push_back({std::move(name), std::move(shape), std::vector<Real>(n, Real(0)), is_weight});
  return tensors_.size() - 1;
}

const ParamTensor* ParamSet::find(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return &t;
  return nullptr;
}

std::size_t ParamSet::total_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.count();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& t : tensors_)
    for (Real v : t.value)
      if (!std::isfinite(v)) return false;
  return true;
}

Gradients::Gradients(const ParamSet& params) {
  buffers_.reserve(params.size());
  for (const auto& t : params) buffers_.emplace_back(t.count(), Real(0));
}

void Gradients::zero() {
  for (auto& b : buffers_) std::fill(b.begin(), b.end(), Real(0));
}

void Gradients::scale(Real s) {
  for (auto& b : buffers_)
    for (Real& v : b) v *= s;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < buffers_.size(); ++i)
    for (std::size_t j = 0; j < buffers_[i].size(); ++j) buffers_[i][j] += other.buffers_[i][j];
  return *this;
}

bool Gradients::all_zero() const {
  for (const auto& b : buffers_)
    for (Real v : b)
      if (v != Real(0)) return false;
  return true;
}

}  // namespace wgain
