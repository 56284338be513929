#pragma once

#include <cstdint>

#include "wgain/params.hpp"

namespace wgain {

struct AdamConfig {
  Real learning_rate = 5e-5;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

/// First/second moment estimates for one parameter set.
class Adam {
 public:
  Adam() = default;
  Adam(const ParamSet& params, AdamConfig cfg) : cfg_(cfg), m_(params), v_(params) {}

  /// One bias-corrected Adam update. A zero gradient leaves the parameters
  /// unchanged as long as the moments are still zero.
  void step(ParamSet& params, const Gradients& grads);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  Gradients m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace wgain
