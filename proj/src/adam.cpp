#include "wgain/adam.hpp"

#include <cmath>

namespace wgain {

void Adam::step(ParamSet& params, const Gradients& grads) {
  ++t_;
  const Real b1 = cfg_.beta1, b2 = cfg_.beta2;
  const Real c1 = Real(1) - std::pow(b1, static_cast<Real>(t_));
  const Real c2 = Real(1) - std::pow(b2, static_cast<Real>(t_));
  const Real lr = cfg_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value;
    auto g = grads[i];
    auto m = m_[i];
    auto v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.epsilon);
    }
  }
}

}  // namespace wgain
