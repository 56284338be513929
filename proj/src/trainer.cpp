#include "wgain/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "wgain/checkpoint.hpp"
#include "wgain/parallel.hpp"

namespace wgain {
namespace {

using Clock = std::chrono::steady_clock;

void check_batch(const Model& model, std::span<const Sample> batch) {
  if (batch.empty()) throw ContractError("training batch is empty");
  const int side = model.input_side();
  for (const auto& s : batch) {
    if (s.x.height() != side || s.x.width() != side || s.m.height() != side || s.m.width() != side ||
        s.z.height() != side || s.z.width() != side)
      throw ContractError("training sample does not match the model input size");
  }
}

void reduce_into(std::vector<Gradients>& locals, Gradients& out) {
  for (auto& g : locals) out += g;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha > 0)) throw ValidationError("alpha must be > 0");
  if (batch < 1) throw ValidationError("batch must be >= 1");
  if (!(lambda_f >= 0 && lambda_g >= 0 && lambda_mae >= 0)) throw ValidationError("lambdas must be >= 0");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (max_steps < 0) throw ValidationError("max_steps must be >= 0");
  if (!(sigma > 0)) throw ValidationError("sigma must be > 0");
  if (!(clip_norm > 0)) throw ValidationError("clip_norm must be > 0");
  if (checkpoint_every < 0 || log_every < 0) throw ValidationError("intervals must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_epsilon >= 0))
    throw ValidationError("invalid Adam hyperparameters");
}

bool StepReport::finite() const {
  return std::isfinite(critic_objective) && std::isfinite(generator_objective) && std::isfinite(recon_loss_value);
}

TrainerState::TrainerState(Model m, const TrainConfig& cfg)
    : model(std::move(m)),
      generator_opt(model.params.generator, cfg.adam()),
      critic_opt(model.params.critic, cfg.adam()) {}

Real recon_loss(const ImageTensor& a, const ImageTensor& b, ReconLoss kind) {
  if (!a.tensor().same_shape(b.tensor())) throw ContractError("recon_loss shape mismatch");
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real d = a[i] - b[i];
    s += kind == ReconLoss::mae ? std::abs(d) : d * d;
  }
  return s / static_cast<Real>(a.size());
}

ImageTensor imputed_image(const Model& model, const Sample& s, Generator::Trace* trace) {
  const ImageTensor x_tilde = mask_image(s.x, s.m);
  const NoiseTensor z_tilde = mask_noise(s.z, s.m);
  const Tensor out = model.generator.forward(model.params.generator, generator_input(x_tilde, z_tilde, s.m), trace);
  return compose_output(ImageTensor(out), x_tilde, s.m);
}

Real critic_objective(const Model& model, std::span<const Sample> batch, Real lambda_f, Gradients* grads) {
  check_batch(model, batch);
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  const Real scale = lambda_f / static_cast<Real>(n);
  std::vector<Real> fake(n), real(n);
  std::vector<Gradients> locals;
  if (grads) locals.assign(worker_count(), Gradients(model.params.critic));
  const auto& critic = model.critic;
  const auto& p = model.params.critic;

  parallel_for(n, [&](std::ptrdiff_t j) {
    const Sample& s = batch[j];
    const ImageTensor x_hat = imputed_image(model, s);
    Critic::Trace tf, tr;
    fake[j] = critic.forward(p, critic_input(x_hat, s.m), grads ? &tf : nullptr);
    real[j] = critic.forward(p, critic_input(s.x, s.m), grads ? &tr : nullptr);
    if (grads) {
      Gradients& g = locals[worker_index()];
      critic.backward(p, tf, scale, &g);
      critic.backward(p, tr, -scale, &g);
    }
  });
  if (grads) reduce_into(locals, *grads);
  const Real mean_fake = std::accumulate(fake.begin(), fake.end(), Real(0)) / static_cast<Real>(n);
  const Real mean_real = std::accumulate(real.begin(), real.end(), Real(0)) / static_cast<Real>(n);
  return lambda_f * (mean_fake - mean_real);
}

Real generator_objective(const Model& model, std::span<const Sample> batch, const TrainConfig& cfg,
                         Gradients* grads, Real* recon_value) {
  check_batch(model, batch);
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<Real> scores(n), recon(n);
  std::vector<Gradients> locals;
  if (grads) locals.assign(worker_count(), Gradients(model.params.generator));
  const Real count = static_cast<Real>(n) * static_cast<Real>(batch[0].x.size());
  const Real adv_scale = -cfg.lambda_g / static_cast<Real>(n);
  const Real rec_scale = cfg.lambda_mae / count;

  parallel_for(n, [&](std::ptrdiff_t j) {
    const Sample& s = batch[j];
    Generator::Trace gt;
    const ImageTensor x_hat = imputed_image(model, s, grads ? &gt : nullptr);
    Critic::Trace ct;
    scores[j] = model.critic.forward(model.params.critic, critic_input(x_hat, s.m), grads ? &ct : nullptr);
    Real r = 0;
    for (std::size_t i = 0; i < x_hat.size(); ++i) {
      const Real d = x_hat[i] - s.x[i];
      r += cfg.recon_loss == ReconLoss::mae ? std::abs(d) : d * d;
    }
    recon[j] = r;
    if (!grads) return;

    Tensor critic_grad;
    if (cfg.lambda_g != 0) model.critic.backward(model.params.critic, ct, adv_scale, nullptr, &critic_grad);
    Tensor g_out(3, s.x.height(), s.x.width());
    const std::size_t plane = s.m.size();
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i) {
        if (s.m.valid(i)) continue;  // composed output ignores the generator here
        const std::size_t k = c * plane + i;
        const Real d = x_hat[k] - s.x[k];
        Real g = cfg.recon_loss == ReconLoss::mae ? (d > 0 ? Real(1) : d < 0 ? Real(-1) : Real(0)) : 2 * d;
        g *= rec_scale;
        if (!critic_grad.empty()) g += critic_grad[k];
        g_out[k] = g;
      }
    model.generator.backward(model.params.generator, gt, g_out, locals[worker_index()]);
  });
  if (grads) reduce_into(locals, *grads);
  const Real mean_score = std::accumulate(scores.begin(), scores.end(), Real(0)) / static_cast<Real>(n);
  const Real rec = std::accumulate(recon.begin(), recon.end(), Real(0)) / count;
  if (recon_value) *recon_value = rec;
  return -cfg.lambda_g * mean_score + cfg.lambda_mae * rec;
}

StepReport critic_step(TrainerState& state, std::span<const Sample> batch, const TrainConfig& cfg) {
  const auto t0 = Clock::now();
  StepReport r;
  r.step = static_cast<std::int64_t>(state.model.params.step);
  Gradients g(state.model.params.critic);
  r.critic_objective = critic_objective(state.model, batch, cfg.lambda_f, &g);
  if (!std::isfinite(r.critic_objective)) throw DivergenceError("critic objective is not finite", r);
  state.critic_opt.step(state.model.params.critic, g);
  clip_critic_weights(state.model.params.critic, cfg.clip_norm);
  r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

StepReport generator_step(TrainerState& state, std::span<const Sample> batch, const TrainConfig& cfg) {
  const auto t0 = Clock::now();
  StepReport r;
  r.step = static_cast<std::int64_t>(state.model.params.step);
  Gradients g(state.model.params.generator);
  r.generator_objective = generator_objective(state.model, batch, cfg, &g, &r.recon_loss_value);
  if (!std::isfinite(r.generator_objective)) throw DivergenceError("generator objective is not finite", r);
  state.generator_opt.step(state.model.params.generator, g);
  r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::int64_t steps_per_epoch(std::size_t n, int batch) {
  if (batch < 1) throw ValidationError("batch must be >= 1");
  return static_cast<std::int64_t>((n + static_cast<std::size_t>(batch) - 1) / static_cast<std::size_t>(batch));
}

TrainResult train(const std::vector<ImageTensor>& corpus, Model initial, const TrainConfig& cfg,
                  const TrainOptions& options) {
  cfg.validate();
  if (corpus.empty()) throw ValidationError("training corpus is empty");
  const int side = initial.input_side();
  for (const auto& x : corpus)
    if (x.height() != side || x.width() != side)
      throw ValidationError("corpus image size does not match the generator input side");

  TrainerState state(std::move(initial), cfg);
  TrainResult result{state.model, {}};

  std::ofstream metrics;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    metrics.open(options.out_dir / "metrics.jsonl", std::ios::app);
    if (!metrics) throw IngestionError("cannot write metrics log in " + options.out_dir.string());
  }
  if (cfg.epochs == 0) {
    if (!options.out_dir.empty()) save_checkpoint(options.out_dir / "final", state.model);
    return result;
  }

  // Keyed by the starting step so a resumed run does not replay the masks and
  // noise of the run it continues.
  const std::uint64_t start = state.model.params.step;
  Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle").split(start);
  Rng mask_rng = Rng::stream(cfg.seed, "mask").split(start);
  Rng noise_rng = Rng::stream(cfg.seed, "noise").split(start);
  std::vector<std::size_t> order(corpus.size());
  const std::int64_t per_epoch = steps_per_epoch(corpus.size(), cfg.batch);
  bool done = false;

  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    for (std::int64_t b = 0; b < per_epoch && !done; ++b) {
      const std::size_t first = static_cast<std::size_t>(b) * cfg.batch;
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch));
      std::vector<Sample> batch;
      batch.reserve(last - first);
      for (std::size_t i = first; i < last; ++i) {
        Sample s{corpus[order[i]], sample_training_mask(options.scenario, side, side, mask_rng),
                 sample_noise(side, side, cfg.sigma, noise_rng)};
        batch.push_back(std::move(s));
      }

      StepReport report;
      try {
        const StepReport rc = critic_step(state, batch, cfg);
        const StepReport rg = generator_step(state, batch, cfg);
        report = {rc.step, rc.critic_objective, rg.generator_objective, rg.recon_loss_value,
                  rc.wall_time + rg.wall_time};
      } catch (const DivergenceError& e) {
        spdlog::error("training diverged at step {}: {}", state.model.params.step, e.what());
        if (metrics) metrics << nlohmann::json{{"step", e.report().step}, {"diverged", true}}.dump() << '\n';
        throw;
      }
      ++state.model.params.step;
      result.log.push_back(report);

      if (metrics && cfg.log_every > 0 && report.step % cfg.log_every == 0) {
        metrics << nlohmann::json{{"step", report.step},
                                  {"epoch", epoch},
                                  {"critic_objective", report.critic_objective},
                                  {"generator_objective", report.generator_objective},
                                  {"recon_loss", report.recon_loss_value},
                                  {"wall_time_s", report.wall_time}}
                       .dump()
                << '\n';
        metrics.flush();
      }
      if (options.on_step) options.on_step(report, state);
      const auto step = static_cast<std::int64_t>(state.model.params.step);
      if (!options.out_dir.empty() && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
        save_checkpoint(options.out_dir / "checkpoint", state.model);
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }
  }
  if (!options.out_dir.empty()) save_checkpoint(options.out_dir / "final", state.model);
  result.model = std::move(state.model);
  return result;
}

}  // namespace wgain
