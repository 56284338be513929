#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "wgain/checkpoint.hpp"
#include "wgain/corpus.hpp"
#include "wgain/trainer.hpp"

using namespace wgain;

namespace {

bool same_params(const ParamSet& a, const ParamSet& b) { return a == b; }

}  // namespace

TEST_CASE("critic gradient matches central differences") {
  Rng rng(22);
  Model model = fixture::generic_model(21, rng);
  auto batch = fixture::smooth_critic_batch(model, 2, 8, rng);
  Gradients g(model.params.critic);
  critic_objective(model, batch, 1.0, &g);
  auto f = [&](const Model& m) { return critic_objective(m, batch, 1.0, nullptr); };
  CHECK(fixture::worst_gradient_error(model, &ModelParams::critic, g, f, 20, rng) <= 1e-3);
}

TEST_CASE("generator gradient matches central differences") {
  for (ReconLoss kind : {ReconLoss::mae, ReconLoss::mse})
    for (double lambda_g : {0.005, 1.0}) {
      Rng rng(24);
      Model model = fixture::generic_model(23, rng);
      auto batch = fixture::random_batch(2, 8, rng);
      TrainConfig cfg;
      cfg.lambda_g = lambda_g;
      cfg.recon_loss = kind;
      Gradients g(model.params.generator);
      generator_objective(model, batch, cfg, &g);
      auto f = [&](const Model& m) { return generator_objective(m, batch, cfg, nullptr); };
      CHECK(fixture::worst_gradient_error(model, &ModelParams::generator, g, f, 20, rng) <= 1e-3);
    }
}

TEST_CASE("reconstruction loss of identical images is zero") {
  Rng rng(1);
  auto x = oracle::random_image(8, 8, rng);
  CHECK(recon_loss(x, x, ReconLoss::mae) == 0.0);
  CHECK(recon_loss(x, x, ReconLoss::mse) == 0.0);
  ImageTensor a(2, 2, 0.0), b(2, 2, 0.5);
  CHECK(recon_loss(a, b, ReconLoss::mae) == 0.5);
  CHECK(recon_loss(a, b, ReconLoss::mse) == 0.25);
}

TEST_CASE("imputed image agrees with the truth on valid pixels bit-exactly") {
  Model model = fixture::tiny_model(2);
  Rng rng(3);
  for (const auto& s : fixture::random_batch(5, 8, rng)) {
    auto xh = imputed_image(model, s);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          if (s.m(y, x)) REQUIRE(xh(c, y, x) == s.x(c, y, x));
  }
}

TEST_CASE("critic and generator steps touch only their own parameters") {
  Model model = fixture::tiny_model(4);
  TrainConfig cfg;
  cfg.alpha = 1e-3;
  TrainerState st(model, cfg);
  Rng rng(5);
  auto batch = fixture::random_batch(3, 8, rng);
  const auto gen_before = st.model.params.generator;
  const auto gen_hash = model_hash(st.model);
  critic_step(st, batch, cfg);
  CHECK(same_params(st.model.params.generator, gen_before));
  CHECK(model_hash(st.model) != gen_hash);
  const auto critic_before = st.model.params.critic;
  generator_step(st, batch, cfg);
  CHECK(same_params(st.model.params.critic, critic_before));
  CHECK_FALSE(same_params(st.model.params.generator, gen_before));
}

TEST_CASE("zero weights leave parameters unchanged") {
  Model model = fixture::tiny_model(6);
  Rng rng(7);
  auto batch = fixture::random_batch(2, 8, rng);
  TrainConfig cfg;
  cfg.lambda_f = 0;
  cfg.lambda_g = 0;
  cfg.lambda_mae = 0;
  TrainerState st(model, cfg);
  critic_step(st, batch, cfg);
  generator_step(st, batch, cfg);
  CHECK(same_params(st.model.params.critic, model.params.critic));
  CHECK(same_params(st.model.params.generator, model.params.generator));
}

TEST_CASE("generator gradient is exactly zero with no recon term and a zero critic") {
  Model model = fixture::tiny_model(8);
  for (auto& t : model.params.critic) std::fill(t.value.begin(), t.value.end(), 0.0);
  Rng rng(9);
  auto batch = fixture::random_batch(3, 8, rng);
  TrainConfig cfg;
  cfg.lambda_mae = 0;
  cfg.lambda_g = 1;
  Gradients g(model.params.generator);
  generator_objective(model, batch, cfg, &g);
  CHECK(g.all_zero());
}

TEST_CASE("clipping holds after every critic step") {
  Model model = fixture::tiny_model(10);
  TrainConfig cfg;
  cfg.alpha = 1e-2;
  TrainerState st(model, cfg);
  Rng rng(11);
  for (int i = 0; i < 30; ++i) {
    auto batch = fixture::random_batch(2, 8, rng);
    critic_step(st, batch, cfg);
    REQUIRE(max_weight_norm(st.model.params.critic) <= 1.0 + 1e-6);
  }
}

TEST_CASE("critic objective descends on a frozen batch (regression fixture)") {
  Model model = fixture::tiny_model(12);
  TrainConfig cfg;
  cfg.alpha = 1e-3;
  TrainerState st(model, cfg);
  Rng rng(13);
  auto batch = fixture::random_batch(4, 8, rng);
  int decreases = 0;
  std::vector<double> trajectory;
  for (int i = 0; i < 50; ++i) {
    const double before = critic_objective(st.model, batch, cfg.lambda_f, nullptr);
    critic_step(st, batch, cfg);
    const double after = critic_objective(st.model, batch, cfg.lambda_f, nullptr);
    trajectory.push_back(after);
    if (after < before) ++decreases;
  }
  MESSAGE("critic descent: " << decreases << "/50 steps decreased; final objective " << trajectory.back());
  CHECK(decreases >= 45);
}

TEST_CASE("recon-only training overfits a single fully masked image") {
  Model model = fixture::tiny_model(14, 16);
  TrainConfig cfg;
  cfg.alpha = 1e-3;
  cfg.lambda_g = 0;
  TrainerState st(model, cfg);
  Rng rng(15);
  Rng img_rng = Rng::stream(15, "synthetic");
  const auto x = make_synthetic_corpus(1, 16, img_rng).front();
  std::vector<Sample> batch{{x, MaskMatrix::zeros(16, 16), sample_noise(16, 16, cfg.sigma, rng)}};
  double recon = 1;
  for (int i = 0; i < 2000; ++i) {
    batch[0].z = sample_noise(16, 16, cfg.sigma, rng);
    recon = generator_step(st, batch, cfg).recon_loss_value;
  }
  MESSAGE("recon-only overfit, final MAE: " << recon);
  CHECK(recon < 0.02);
}

TEST_CASE("steps per epoch is ceil(n / batch)") {
  CHECK(steps_per_epoch(16, 16) == 1);
  CHECK(steps_per_epoch(17, 16) == 2);
  CHECK(steps_per_epoch(1, 32) == 1);
  CHECK(steps_per_epoch(64, 32) == 2);
}

TEST_CASE("epochs = 0 returns the initial model and an empty log") {
  Model model = fixture::tiny_model(16);
  Rng rng(17);
  std::vector<ImageTensor> corpus{oracle::random_image(8, 8, rng)};
  TrainConfig cfg;
  cfg.epochs = 0;
  auto r = train(corpus, model, cfg);
  CHECK(r.log.empty());
  CHECK(model_hash(r.model) == model_hash(model));
}

TEST_CASE("training is reproducible from the seed") {
  Rng rng(18);
  std::vector<ImageTensor> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back(oracle::random_image(8, 8, rng));
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.epochs = 4;
  cfg.seed = 99;
  cfg.alpha = 1e-3;
  auto a = train(corpus, fixture::tiny_model(19), cfg);
  auto b = train(corpus, fixture::tiny_model(19), cfg);
  REQUIRE(a.log.size() == 12);
  REQUIRE(b.log.size() == 12);
  for (std::size_t i = 0; i < 11; ++i) {
    CHECK(a.log[i].critic_objective == b.log[i].critic_objective);
    CHECK(a.log[i].generator_objective == b.log[i].generator_objective);
  }
  CHECK(model_hash(a.model) == model_hash(b.model));
  cfg.seed = 100;
  auto c = train(corpus, fixture::tiny_model(19), cfg);
  CHECK(model_hash(c.model) != model_hash(a.model));
}

TEST_CASE("max_steps stops mid-epoch and training writes metrics and checkpoints") {
  Rng rng(20);
  std::vector<ImageTensor> corpus;
  for (int i = 0; i < 8; ++i) corpus.push_back(oracle::random_image(8, 8, rng));
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.epochs = 10;
  cfg.max_steps = 3;
  cfg.checkpoint_every = 2;
  const auto dir = std::filesystem::temp_directory_path() / "wgain_test_train";
  std::filesystem::remove_all(dir);
  TrainOptions opt;
  opt.out_dir = dir;
  int calls = 0;
  opt.on_step = [&](const StepReport&, const TrainerState&) { ++calls; };
  auto r = train(corpus, fixture::tiny_model(21), cfg, opt);
  CHECK(r.log.size() == 3);
  CHECK(calls == 3);
  CHECK(r.model.params.step == 3);
  CHECK(std::filesystem::exists(dir / "checkpoint" / "manifest.json"));
  CHECK(load_checkpoint(dir / "checkpoint").params.step == 2);
  CHECK(load_checkpoint(dir / "final").params.step == 3);
  std::ifstream in(dir / "metrics.jsonl");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("non-finite objective raises a divergence error with the step report") {
  Model model = fixture::tiny_model(22);
  Rng rng(23);
  auto batch = fixture::random_batch(2, 8, rng);
  for (auto& t : model.params.critic)
    if (t.name == "critic.fc.bias") t.value[0] = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  TrainerState st(model, cfg);
  try {
    critic_step(st, batch, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.report().step == 0);
    CHECK_FALSE(e.report().finite());
  }
}

TEST_CASE("invalid training configuration is rejected") {
  TrainConfig cfg;
  cfg.alpha = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.batch = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.lambda_g = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  std::vector<ImageTensor> empty;
  CHECK_THROWS_AS(train(empty, fixture::tiny_model(), TrainConfig{}), ValidationError);
}
