#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wgain/tensor.hpp"

namespace wgain {

/// Named parameter tensor. `is_weight` separates weight tensors (subject to
/// clipping and Glorot init) from biases.
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> value;
  bool is_weight = true;

  std::size_t count() const { return value.size(); }
  /// Euclidean norm of all entries.
  Real l2_norm() const;

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

/// Ordered collection of parameter tensors; order is fixed by the network
/// that created it.
class ParamSet {
 public:
  std::size_t add(std::string name, std::vector<int> shape, bool is_weight);

  std::size_t size() const { return tensors_.size(); }
  ParamTensor& operator[](std::size_t i) { return tensors_[i]; }
  const ParamTensor& operator[](std::size_t i) const { return tensors_[i]; }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  const ParamTensor* find(const std::string& name) const;
  std::size_t total_count() const;
  bool all_finite() const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<ParamTensor> tensors_;
};

/// Gradient buffers aligned with a ParamSet.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParamSet& params);

  std::span<Real> operator[](std::size_t i) { return buffers_[i]; }
  std::span<const Real> operator[](std::size_t i) const { return buffers_[i]; }
  std::size_t size() const { return buffers_.size(); }

  void zero();
  void scale(Real s);
  Gradients& operator+=(const Gradients& other);
  bool all_zero() const;

 private:
  std::vector<std::vector<Real>> buffers_;
};

}  // namespace wgain
