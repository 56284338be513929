#include "wgain/config.hpp"

#include <fstream>

#include "wgain/archive.hpp"
#include "wgain/errors.hpp"

namespace wgain {

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"input_side", c.input_side},       {"encoder_widths", c.encoder_widths},
       {"decoder_widths", c.decoder_widths}, {"dilation_rates", c.dilation_rates},
       {"block_kernel", c.block_kernel},     {"head_kernel", c.head_kernel},
       {"head_channels", c.head_channels}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  j.at("input_side").get_to(c.input_side);
  j.at("encoder_widths").get_to(c.encoder_widths);
  j.at("decoder_widths").get_to(c.decoder_widths);
  j.at("dilation_rates").get_to(c.dilation_rates);
  j.at("block_kernel").get_to(c.block_kernel);
  j.at("head_kernel").get_to(c.head_kernel);
  j.at("head_channels").get_to(c.head_channels);
}

void to_json(nlohmann::json& j, const CriticConfig& c) {
  j = {{"widths", c.widths},       {"kernel", c.kernel},           {"stride", c.stride},
       {"clip_norm", c.clip_norm}, {"leaky_slope", c.leaky_slope}};
}

void from_json(const nlohmann::json& j, CriticConfig& c) {
  j.at("widths").get_to(c.widths);
  j.at("kernel").get_to(c.kernel);
  j.at("stride").get_to(c.stride);
  j.at("clip_norm").get_to(c.clip_norm);
  j.at("leaky_slope").get_to(c.leaky_slope);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "alpha",          "batch",          "lambda_f",       "lambda_g",        "lambda_mae",
      "epochs",         "max_steps",      "sigma",          "clip_norm",       "recon_loss",
      "seed",           "checkpoint_every", "log_every",    "adam_beta1",      "adam_beta2",
      "adam_epsilon",   "image_side",     "encoder_widths", "decoder_widths",  "dilation_rates",
      "block_kernel",   "head_kernel",    "head_channels",  "critic_widths",   "critic_kernel",
      "critic_stride",  "leaky_slope",    "source_dir",     "train_fraction",  "eval_fraction",
      "shuffle_seed"};
  return k;
}

void RunConfig::set(std::string_view key, const nlohmann::json& v) {
  try {
    auto& t = train;
    if (key == "alpha") v.get_to(t.alpha);
    else if (key == "batch") v.get_to(t.batch);
    else if (key == "lambda_f") v.get_to(t.lambda_f);
    else if (key == "lambda_g") v.get_to(t.lambda_g);
    else if (key == "lambda_mae") v.get_to(t.lambda_mae);
    else if (key == "epochs") v.get_to(t.epochs);
    else if (key == "max_steps") v.get_to(t.max_steps);
    else if (key == "sigma") v.get_to(t.sigma);
    else if (key == "clip_norm") {
      v.get_to(t.clip_norm);
      critic.clip_norm = t.clip_norm;
    } else if (key == "recon_loss") {
      const auto s = v.get<std::string>();
      if (s == "mae") t.recon_loss = ReconLoss::mae;
      else if (s == "mse") t.recon_loss = ReconLoss::mse;
      else throw ValidationError("recon_loss must be 'mae' or 'mse'");
    } else if (key == "seed") {
      v.get_to(t.seed);
      corpus.shuffle_seed = t.seed;
    } else if (key == "checkpoint_every") v.get_to(t.checkpoint_every);
    else if (key == "log_every") v.get_to(t.log_every);
    else if (key == "adam_beta1") v.get_to(t.adam_beta1);
    else if (key == "adam_beta2") v.get_to(t.adam_beta2);
    else if (key == "adam_epsilon") v.get_to(t.adam_epsilon);
    else if (key == "image_side") {
      v.get_to(generator.input_side);
      corpus.target_side = generator.input_side;
    } else if (key == "encoder_widths") v.get_to(generator.encoder_widths);
    else if (key == "decoder_widths") v.get_to(generator.decoder_widths);
    else if (key == "dilation_rates") v.get_to(generator.dilation_rates);
    else if (key == "block_kernel") v.get_to(generator.block_kernel);
    else if (key == "head_kernel") v.get_to(generator.head_kernel);
    else if (key == "head_channels") v.get_to(generator.head_channels);
    else if (key == "critic_widths") v.get_to(critic.widths);
    else if (key == "critic_kernel") v.get_to(critic.kernel);
    else if (key == "critic_stride") v.get_to(critic.stride);
    else if (key == "leaky_slope") v.get_to(critic.leaky_slope);
    else if (key == "source_dir") corpus.source_dir = v.get<std::string>();
    else if (key == "train_fraction") v.get_to(corpus.train_fraction);
    else if (key == "eval_fraction") v.get_to(corpus.eval_fraction);
    else if (key == "shuffle_seed") v.get_to(corpus.shuffle_seed);
    else throw ValidationError("unknown config key '" + std::string(key) + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config key '" + std::string(key) + "': " + e.what());
  }
}

void RunConfig::set_from_text(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ValidationError("expected key=value, got '" + std::string(assignment) + "'");
  const auto key = assignment.substr(0, eq);
  const std::string text(assignment.substr(eq + 1));
  auto parsed = nlohmann::json::parse(text, nullptr, false);
  set(key, parsed.is_discarded() ? nlohmann::json(text) : parsed);
}

void RunConfig::apply(const nlohmann::json& flat) {
  if (!flat.is_object()) throw ValidationError("config document must be a flat JSON object");
  for (auto it = flat.begin(); it != flat.end(); ++it) set(it.key(), it.value());
}

nlohmann::json RunConfig::to_flat_json() const {
  const auto& t = train;
  return {{"alpha", t.alpha},
          {"batch", t.batch},
          {"lambda_f", t.lambda_f},
          {"lambda_g", t.lambda_g},
          {"lambda_mae", t.lambda_mae},
          {"epochs", t.epochs},
          {"max_steps", t.max_steps},
          {"sigma", t.sigma},
          {"clip_norm", t.clip_norm},
          {"recon_loss", t.recon_loss == ReconLoss::mae ? "mae" : "mse"},
          {"seed", t.seed},
          {"checkpoint_every", t.checkpoint_every},
          {"log_every", t.log_every},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_epsilon", t.adam_epsilon},
          {"image_side", generator.input_side},
          {"encoder_widths", generator.encoder_widths},
          {"decoder_widths", generator.decoder_widths},
          {"dilation_rates", generator.dilation_rates},
          {"block_kernel", generator.block_kernel},
          {"head_kernel", generator.head_kernel},
          {"head_channels", generator.head_channels},
          {"critic_widths", critic.widths},
          {"critic_kernel", critic.kernel},
          {"critic_stride", critic.stride},
          {"leaky_slope", critic.leaky_slope},
          {"source_dir", corpus.source_dir.string()},
          {"train_fraction", corpus.train_fraction},
          {"eval_fraction", corpus.eval_fraction},
          {"shuffle_seed", corpus.shuffle_seed}};
}

void RunConfig::validate() const {
  train.validate();
  generator.validate();
  critic.validate();
  corpus.validate();
  if (corpus.target_side != generator.input_side)
    throw ValidationError("corpus target side and generator input side differ");
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path.string() + ": " + e.what());
  }
  RunConfig c;
  c.apply(j);
  return c;
}

std::string fingerprint(const nlohmann::json& j) {
  const std::string s = j.dump();
  return sha256_hex(std::as_bytes(std::span<const char>(s))).substr(0, 12);
}

}  // namespace wgain
