#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "fixtures.hpp"
#include "wgain/archive.hpp"
#include "wgain/checkpoint.hpp"
#include "wgain/config.hpp"
#include "wgain/errors.hpp"

using namespace wgain;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("wgain_ckpt_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

void write_json(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_CASE("checkpoint round trip preserves every value and the hash") {
  auto dir = scratch("rt");
  Model model = fixture::tiny_model(601);
  model.params.step = 1234;
  const auto hash = save_checkpoint(dir, model);
  CHECK(hash == model_hash(model));
  CHECK(hash.size() == 64);
  Model loaded = load_checkpoint(dir, model.generator.config(), model.critic.config());
  CHECK(model_hash(loaded) == hash);
  CHECK(loaded.params.step == 1234);
  REQUIRE(loaded.params.generator.size() == model.params.generator.size());
  for (std::size_t i = 0; i < model.params.generator.size(); ++i)
    CHECK(loaded.params.generator[i].value == model.params.generator[i].value);
  for (std::size_t i = 0; i < model.params.critic.size(); ++i)
    CHECK(loaded.params.critic[i].value == model.params.critic[i].value);
  fs::remove_all(dir);
}

TEST_CASE("model hash reacts to values and the step counter") {
  Model a = fixture::tiny_model(602), b = fixture::tiny_model(602);
  CHECK(model_hash(a) == model_hash(b));
  b.params.step = 1;
  CHECK(model_hash(a) != model_hash(b));
  b.params.step = 0;
  b.params.critic[0].value[0] = std::nextafter(b.params.critic[0].value[0], 1.0);
  CHECK(model_hash(a) != model_hash(b));
}

TEST_CASE("tampered parameters are rejected") {
  auto dir = scratch("tamper");
  Model model = fixture::tiny_model(603);
  save_checkpoint(dir, model);
  {
    std::fstream f(dir / "params.wgar", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('\x5a');
  }
  CHECK_THROWS_AS(load_checkpoint(dir), LoadError);
  fs::remove_all(dir);
}

TEST_CASE("manifest problems are load errors") {
  auto dir = scratch("manifest");
  Model model = fixture::tiny_model(604);
  save_checkpoint(dir, model);
  const auto good = read_json(dir / "manifest.json");

  auto with = [&](auto edit) {
    auto j = good;
    edit(j);
    write_json(dir / "manifest.json", j);
    return j;
  };
  with([](nlohmann::json& j) { j["version"] = kCheckpointVersion + 1; });
  CHECK_THROWS_AS(load_checkpoint(dir), LoadError);
  with([](nlohmann::json& j) { j["format"] = "something-else"; });
  CHECK_THROWS_AS(load_checkpoint(dir), LoadError);
  with([](nlohmann::json& j) { j["step"] = 99; });
  CHECK_THROWS_AS(load_checkpoint(dir), LoadError);
  with([](nlohmann::json& j) { j.erase("tensors"); });
  CHECK_THROWS_AS(load_checkpoint(dir), LoadError);
  std::ofstream(dir / "manifest.json") << "{not json";
  CHECK_THROWS_AS(load_checkpoint(dir), LoadError);
  write_json(dir / "manifest.json", good);
  CHECK_NOTHROW(load_checkpoint(dir));
  CHECK_THROWS_AS(load_checkpoint(scratch("absent")), LoadError);
  fs::remove_all(dir);
}

TEST_CASE("config mismatch on load is a load error") {
  auto dir = scratch("cfg");
  Model model = fixture::tiny_model(605);
  save_checkpoint(dir, model);
  auto g = model.generator.config();
  g.encoder_widths[0] += 1;
  CHECK_THROWS_AS(load_checkpoint(dir, g), LoadError);
  auto c = model.critic.config();
  c.leaky_slope = 0.3;
  CHECK_THROWS_AS(load_checkpoint(dir, std::nullopt, c), LoadError);
  fs::remove_all(dir);
}

TEST_CASE("archive round trip and corruption") {
  auto path = scratch("arch");
  fs::create_directories(path);
  std::vector<NamedArray> arrays{{"a", {2, 3}, {1, 2, 3, 4, 5, 6}},
                                 {"scalar", {}, {3.5}},
                                 {"empty", {0}, {}},
                                 {"neg", {1}, {-0.0}}};
  write_archive(path / "x.wgar", arrays);
  CHECK(read_archive(path / "x.wgar") == arrays);
  const auto size = fs::file_size(path / "x.wgar");
  fs::resize_file(path / "x.wgar", size - 4);
  CHECK_THROWS_AS(read_archive(path / "x.wgar"), LoadError);
  fs::remove_all(path);
}

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex(std::span<const std::byte>{}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  CHECK(sha256_hex(std::as_bytes(std::span(abc.data(), abc.size()))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run config keys, parsing and validation") {
  RunConfig cfg;
  const auto flat = cfg.to_flat_json();
  CHECK(flat.size() == RunConfig::keys().size());
  for (const auto& k : RunConfig::keys()) CHECK(flat.contains(k));

  cfg.set_from_text("alpha=0.0005");
  CHECK(cfg.train.alpha == 0.0005);
  cfg.set_from_text("recon_loss=mse");
  CHECK(cfg.train.recon_loss == ReconLoss::mse);
  cfg.set_from_text("encoder_widths=[8,8,16]");
  CHECK(cfg.generator.encoder_widths == std::vector<int>{8, 8, 16});
  cfg.set("batch", 7);
  CHECK(cfg.train.batch == 7);

  CHECK_THROWS_AS(cfg.set_from_text("no_such_key=1"), ValidationError);
  CHECK_THROWS_AS(cfg.set_from_text("alpha"), ValidationError);
  CHECK_THROWS_AS(cfg.set_from_text("batch=\"many\""), ValidationError);
  CHECK_THROWS_AS(cfg.set_from_text("recon_loss=huber"), ValidationError);
  CHECK_THROWS_AS(cfg.apply(nlohmann::json::array()), ValidationError);

  RunConfig again;
  again.apply(cfg.to_flat_json());
  CHECK(again.to_flat_json() == cfg.to_flat_json());
}

TEST_CASE("run config file loading") {
  auto dir = scratch("runcfg");
  fs::create_directories(dir);
  write_json(dir / "ok.json", {{"alpha", 0.002}, {"epochs", 3}});
  auto cfg = RunConfig::load(dir / "ok.json");
  CHECK(cfg.train.alpha == 0.002);
  CHECK(cfg.train.epochs == 3);
  write_json(dir / "bad.json", {{"alpha", 0.002}, {"typo", 1}});
  CHECK_THROWS_AS(RunConfig::load(dir / "bad.json"), ValidationError);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(RunConfig::load(dir / "broken.json"), ValidationError);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("fingerprint is short, stable and content sensitive") {
  nlohmann::json a{{"x", 1}, {"y", "z"}}, b{{"y", "z"}, {"x", 1}}, c{{"x", 2}, {"y", "z"}};
  CHECK(fingerprint(a).size() == 12);
  CHECK(fingerprint(a) == fingerprint(b));
  CHECK(fingerprint(a) != fingerprint(c));
}
