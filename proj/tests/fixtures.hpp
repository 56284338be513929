#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "wgain/model.hpp"
#include "wgain/trainer.hpp"

namespace fixture {

inline wgain::GeneratorConfig tiny_generator(int side = 8) {
  wgain::GeneratorConfig g;
  g.input_side = side;
  g.encoder_widths = {4, 4, 8};
  g.decoder_widths = {8, 4};
  return g;
}

inline wgain::CriticConfig tiny_critic() {
  wgain::CriticConfig c;
  c.widths = {4, 4, 8, 8, 8};
  return c;
}

inline wgain::Model tiny_model(std::uint64_t seed = 1, int side = 8) {
  return wgain::Model::create(tiny_generator(side), tiny_critic(), seed);
}

inline std::vector<wgain::Sample> random_batch(int n, int side, wgain::Rng& rng, double p_missing = 0.5,
                                              double sigma = 0.1) {
  std::vector<wgain::Sample> batch;
  for (int i = 0; i < n; ++i) {
    wgain::Sample s;
    s.x = oracle::random_image(side, side, rng);
    s.m = oracle::random_mask(side, side, p_missing, rng);
    s.z = wgain::sample_noise(side, side, sigma, rng);
    batch.push_back(std::move(s));
  }
  return batch;
}

struct Probe {
  std::size_t tensor, index;
};

inline std::vector<Probe> sample_probes(const wgain::ParamSet& p, int n, wgain::Rng& rng) {
  std::vector<Probe> out;
  while (static_cast<int>(out.size()) < n) {
    const auto t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p.size()) - 1));
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p[t].value.size()) - 1));
    out.push_back({t, i});
  }
  return out;
}

// |a - n| / max(|a|, |n|, 1e-7): a relative error with a floor for parameters
// whose true derivative is (numerically) zero.
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
}

// Largest relative error between `grads` and central differences of `f` over
// randomly chosen parameters of one network.
template <class Objective>
double worst_gradient_error(wgain::Model model, wgain::ParamSet wgain::ModelParams::*which,
                            const wgain::Gradients& grads, Objective f, int probes, wgain::Rng& rng) {
  const double h = 1e-4;
  double worst = 0;
  for (const auto& pr : sample_probes(model.params.*which, probes, rng)) {
    wgain::Real& w = (model.params.*which)[pr.tensor].value[pr.index];
    const wgain::Real saved = w;
    w = saved + h;
    const double up = f(model);
    w = saved - h;
    const double down = f(model);
    w = saved;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, rel_error(grads[pr.tensor][pr.index], numeric));
  }
  return worst;
}

// Zero biases put many pre-activations exactly on a kink (and create max-pool
// ties), where central differences are meaningless; check at a generic point.
inline wgain::Model generic_model(std::uint64_t seed, wgain::Rng& rng) {
  wgain::Model model = tiny_model(seed);
  for (auto* set : {&model.params.generator, &model.params.critic})
    for (auto& t : *set)
      if (!t.is_weight)
        for (auto& v : t.value) v = rng.uniform(-0.5, 0.5);
  return model;
}

/// Smallest |activation| over every critic layer for the real and imputed
/// images of a batch. Leaky ReLU keeps the sign, so this bounds the distance
/// of every pre-activation from the kink.
inline double critic_kink_margin(const wgain::Model& model, const std::vector<wgain::Sample>& batch) {
  double margin = 1e300;
  for (const auto& s : batch)
    for (const auto& img : {s.x, wgain::imputed_image(model, s)}) {
      wgain::Critic::Trace t;
      model.critic.forward(model.params.critic, wgain::critic_input(img, s.m), &t);
      for (const auto& a : t.activations)
        for (double v : a.data()) margin = std::min(margin, std::abs(v));
    }
  return margin;
}

/// First random batch whose critic pre-activations all clear `margin`, so a
/// central difference of step 1e-4 stays on one linear piece. Clipped weights
/// and slopes <= 1 keep downstream shifts on the order of the step.
inline std::vector<wgain::Sample> smooth_critic_batch(const wgain::Model& model, int n, int side, wgain::Rng& rng,
                                                     double margin = 5e-4) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    auto batch = random_batch(n, side, rng);
    if (critic_kink_margin(model, batch) > margin) return batch;
  }
  throw std::runtime_error("no kink-free batch found");
}

}  // namespace fixture
