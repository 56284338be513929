#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgain/adam.hpp"
#include "wgain/errors.hpp"
#include "wgain/mask.hpp"
#include "wgain/model.hpp"

namespace wgain {

enum class ReconLoss { mae, mse };

struct TrainConfig {
  Real alpha = 5e-5;
  int batch = 32;
  Real lambda_f = 1.0;
  Real lambda_g = 0.005;
  Real lambda_mae = 1.0;
  int epochs = 1;
  /// Stops after this many steps when > 0, even mid-epoch.
  std::int64_t max_steps = 0;
  Real sigma = 0.1;
  Real clip_norm = 1.0;
  ReconLoss recon_loss = ReconLoss::mae;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;
  std::int64_t log_every = 1;
  Real adam_beta1 = 0.9;
  Real adam_beta2 = 0.999;
  Real adam_epsilon = 1e-8;

  void validate() const;
  AdamConfig adam() const { return {alpha, adam_beta1, adam_beta2, adam_epsilon}; }
};

struct StepReport {
  std::int64_t step = 0;
  Real critic_objective = 0;
  Real generator_objective = 0;
  Real recon_loss_value = 0;
  double wall_time = 0;  // seconds

  bool finite() const;
};

/// Non-finite objective; carries the offending step's report.
class DivergenceError : public NumericalFault {
 public:
  DivergenceError(const std::string& what, StepReport report) : NumericalFault(what), report_(report) {}
  const StepReport& report() const { return report_; }

 private:
  StepReport report_;
};

/// One training example: ground truth, its mask and raw (unmasked) noise.
struct Sample {
  ImageTensor x;
  MaskMatrix m;
  NoiseTensor z;
};

/// Model plus optimizer state for both networks.
struct TrainerState {
  Model model;
  Adam generator_opt;
  Adam critic_opt;

  TrainerState(Model m, const TrainConfig& cfg);
};

/// Mean absolute or squared error over all pixels and channels.
Real recon_loss(const ImageTensor& a, const ImageTensor& b, ReconLoss kind);

/// x_hat = compose(g(x_tilde, z_tilde, M), x_tilde, M) for one sample.
ImageTensor imputed_image(const Model& model, const Sample& s, Generator::Trace* trace = nullptr);

/// Critic objective lambda_f * (mean f(x_hat, m) - mean f(x, m)) and its
/// parameter gradient. Generator parameters are read only.
Real critic_objective(const Model& model, std::span<const Sample> batch, Real lambda_f, Gradients* grads);

/// Generator objective -lambda_g * mean f(x_hat, m) + lambda_mae * recon(x_hat, x)
/// and its parameter gradient. Critic parameters are read only.
/// `recon_value`, when given, receives the reconstruction term.
Real generator_objective(const Model& model, std::span<const Sample> batch, const TrainConfig& cfg,
                         Gradients* grads, Real* recon_value = nullptr);

/// One Adam update of the critic followed by weight clipping.
StepReport critic_step(TrainerState& state, std::span<const Sample> batch, const TrainConfig& cfg);
/// One Adam update of the generator.
StepReport generator_step(TrainerState& state, std::span<const Sample> batch, const TrainConfig& cfg);

struct TrainOptions {
  /// Directory for periodic checkpoints and metrics.jsonl; empty disables both.
  std::filesystem::path out_dir;
  /// Called after each completed critic+generator step.
  std::function<void(const StepReport&, const TrainerState&)> on_step;
  /// Per-sample training scenario; defaults to the mixed train variant.
  ScenarioSpec scenario{ScenarioKind::noise, ScenarioVariant::train};
};

struct TrainResult {
  Model model;
  std::vector<StepReport> log;
};

/// Number of mini-batches per epoch: ceil(n / batch).
std::int64_t steps_per_epoch(std::size_t n, int batch);

/// Alternating critic/generator optimization over shuffled mini-batches with
/// fresh masks and noise per sample per epoch.
TrainResult train(const std::vector<ImageTensor>& corpus, Model initial, const TrainConfig& cfg,
                  const TrainOptions& options = {});

}  // namespace wgain
