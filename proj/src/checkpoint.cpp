#include "wgain/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "wgain/archive.hpp"
#include "wgain/config.hpp"
#include "wgain/errors.hpp"

namespace wgain {
namespace {

void append_tensor_hashes(const ParamSet& set, nlohmann::json& list, std::string& digest_input) {
  for (const auto& t : set) {
    const std::string h = sha256_hex(std::span<const double>(t.value));
    list.push_back({{"name", t.name}, {"shape", t.shape}, {"sha256", h}});
    digest_input += t.name;
    digest_input += ':';
    digest_input += h;
    digest_input += '\n';
  }
}

std::string combine(const std::string& digest_input, std::uint64_t step) {
  const std::string s = digest_input + "step:" + std::to_string(step);
  return sha256_hex(std::as_bytes(std::span<const char>(s)));
}

void load_set(ParamSet& set, const std::vector<NamedArray>& arrays, std::size_t& cursor,
              const nlohmann::json& hashes) {
  for (auto& t : set) {
    if (cursor >= arrays.size()) throw LoadError("checkpoint is missing tensor " + t.name);
    const auto& a = arrays[cursor];
    if (a.name != t.name) throw LoadError("checkpoint tensor order mismatch at " + t.name);
    if (a.shape.size() != t.shape.size() || !std::equal(a.shape.begin(), a.shape.end(), t.shape.begin()))
      throw LoadError("checkpoint tensor " + t.name + " has the wrong shape");
    if (hashes.at(cursor).at("sha256").get<std::string>() != sha256_hex(std::span<const double>(a.data)))
      throw LoadError("checkpoint tensor " + t.name + " fails its content hash");
    t.value = a.data;
    ++cursor;
  }
}

}  // namespace

std::string model_hash(const Model& model) {
  nlohmann::json list = nlohmann::json::array();
  std::string digest;
  append_tensor_hashes(model.params.generator, list, digest);
  append_tensor_hashes(model.params.critic, list, digest);
  return combine(digest, model.params.step);
}

std::string save_checkpoint(const std::filesystem::path& dir, const Model& model) {
  namespace fs = std::filesystem;
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  nlohmann::json tensors = nlohmann::json::array();
  std::string digest;
  append_tensor_hashes(model.params.generator, tensors, digest);
  append_tensor_hashes(model.params.critic, tensors, digest);
  const std::string hash = combine(digest, model.params.step);

  std::vector<NamedArray> arrays;
  for (const ParamSet* set : {&model.params.generator, &model.params.critic})
    for (const auto& t : *set) arrays.push_back({t.name, {t.shape.begin(), t.shape.end()}, t.value});
  write_archive(tmp / "params.wgar", arrays);

  const nlohmann::json manifest{{"format", "wgain-checkpoint"},
                                {"version", kCheckpointVersion},
                                {"generator", model.generator.config()},
                                {"critic", model.critic.config()},
                                {"step", model.params.step},
                                {"content_hash", hash},
                                {"tensors", tensors}};
  {
    std::ofstream os(tmp / "manifest.json");
    if (!os) throw IngestionError("cannot write checkpoint manifest in " + tmp.string());
    os << manifest.dump(2) << '\n';
  }
  fs::remove_all(dir);
  fs::rename(tmp, dir);
  return hash;
}

Model load_checkpoint(const std::filesystem::path& dir, const std::optional<GeneratorConfig>& expect_generator,
                      const std::optional<CriticConfig>& expect_critic) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw LoadError("no checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
    if (manifest.at("format") != "wgain-checkpoint") throw LoadError(dir.string() + " is not a checkpoint");
    if (manifest.at("version").get<int>() != kCheckpointVersion)
      throw LoadError("checkpoint version " + manifest.at("version").dump() + " is not supported");
    const auto gcfg = manifest.at("generator").get<GeneratorConfig>();
    const auto ccfg = manifest.at("critic").get<CriticConfig>();
    if (expect_generator && !(*expect_generator == gcfg))
      throw LoadError("checkpoint generator config does not match the requested config");
    if (expect_critic && !(*expect_critic == ccfg))
      throw LoadError("checkpoint critic config does not match the requested config");

    Model model{Generator(gcfg), Critic(ccfg, gcfg.input_side), {}};
    model.params.generator = model.generator.empty_params();
    model.params.critic = model.critic.empty_params();
    model.params.step = manifest.at("step").get<std::uint64_t>();
    const auto arrays = read_archive(dir / "params.wgar");
    const auto& hashes = manifest.at("tensors");
    std::size_t cursor = 0;
    load_set(model.params.generator, arrays, cursor, hashes);
    load_set(model.params.critic, arrays, cursor, hashes);
    if (cursor != arrays.size()) throw LoadError("checkpoint holds unexpected extra tensors");
    if (model_hash(model) != manifest.at("content_hash").get<std::string>())
      throw LoadError("checkpoint content hash mismatch");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed checkpoint manifest in " + dir.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw LoadError(std::string("checkpoint config is invalid: ") + e.what());
  }
}

}  // namespace wgain
