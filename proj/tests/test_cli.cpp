#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <csignal>
#include <thread>

#include <httplib.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "wgain/checkpoint.hpp"
#include "wgain/cli.hpp"
#include "wgain/eval.hpp"
#include "wgain/image_io.hpp"

using namespace wgain;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("wgain_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the real binary with stdout and stderr captured to files.
Run run_cli(const std::string& args) {
  const auto out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = std::string(WGAIN_CLI_PATH) + " --log-level warn " + args + " >" + out.string() + " 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

const std::string kTiny =
    "--set image_side=16 encoder_widths=[4,4,8] decoder_widths=[8,4] critic_widths=[4,4,8,8,8] batch=2 "
    "max_steps=3 log_every=1";

// One trained checkpoint shared by the tests below.
const fs::path& trained() {
  static const fs::path run = [] {
    const auto dir = workdir() / "train";
    auto r = run_cli("train --synthetic 6 --seed 5 --out " + dir.string() + " " + kTiny);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return dir;
  }();
  return run;
}

}  // namespace

TEST_CASE("usage and exit codes for bad invocations") {
  auto none = run_cli("");
  CHECK(none.code == 1);
  CHECK(none.err.find("train") != std::string::npos);

  auto unknown = run_cli("frobnicate");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("Usage") != std::string::npos);

  auto help = run_cli("--help");
  CHECK(help.code == 0);
  for (const char* sub : {"prepare", "train", "eval", "inpaint", "baseline", "serve"})
    CHECK(help.out.find(sub) != std::string::npos);

  CHECK(run_cli("eval").code == 1);
  CHECK(run_cli("train --synthetic 2 --set nonsense=1").code == 1);
  CHECK(run_cli("train --synthetic 2 --set alpha=-1").code == 1);
  CHECK(run_cli("eval --checkpoint " + (workdir() / "no_such_checkpoint").string()).code == 2);
  CHECK(run_cli("baseline --image " + (workdir() / "missing.png").string() + " --scenario noise50").code == 2);
}

TEST_CASE("train writes a checkpoint, metrics and a manifest") {
  const auto& dir = trained();
  CHECK(fs::exists(dir / "final" / "manifest.json"));
  CHECK(fs::exists(dir / "final" / "params.wgar"));
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.contains("argv"));
  CHECK(manifest.contains("config"));
  CHECK(manifest.contains("git_commit"));
  CHECK(manifest["config"]["image_side"] == 16);
  auto model = load_checkpoint(dir / "final");
  CHECK(model.params.step == 3);
  CHECK(manifest["final_checkpoint"]["hash"] == model_hash(model));

  std::ifstream metrics(dir / "metrics.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    ++lines;
  }
  CHECK(lines == 3);
}

TEST_CASE("eval writes a five row table and leaves the checkpoint unchanged") {
  const auto ckpt = trained() / "final";
  const auto before = model_hash(load_checkpoint(ckpt));
  const auto dir = workdir() / "eval";
  auto r = run_cli("eval --synthetic 10 --examples 1 --checkpoint " + ckpt.string() + " --out " + dir.string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto rows = read_table_csv(dir / "table.csv");
  CHECK(rows.size() == 5);
  CHECK(fs::exists(dir / "grid.png"));
  CHECK(fs::exists(dir / "reference_methods.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["checkpoint_hash"] == before);
  CHECK(r.out.find("Noise 95%") != std::string::npos);
  CHECK(model_hash(load_checkpoint(ckpt)) == before);

  const auto again = workdir() / "eval2";
  REQUIRE(run_cli("eval --synthetic 10 --examples 1 --checkpoint " + ckpt.string() + " --out " + again.string()).code == 0);
  CHECK(slurp(again / "table.csv") == slurp(dir / "table.csv"));

  auto subset = run_cli("eval --synthetic 10 --scenarios noise50,noise95 --examples 0 --checkpoint " + ckpt.string() +
                      " --out " + (workdir() / "eval3").string());
  REQUIRE(subset.code == 0);
  CHECK(read_table_csv(workdir() / "eval3" / "table.csv").size() == 2);
  CHECK(run_cli("eval --synthetic 10 --scenarios bogus --checkpoint " + ckpt.string()).code == 1);
}

TEST_CASE("inpaint keeps valid pixels of the input") {
  Rng rng(901);
  const auto image = workdir() / "in.png", mask = workdir() / "mask.png", output = workdir() / "out.png";
  write_png(image, oracle::random_image(16, 16, rng));
  auto m = oracle::random_mask(16, 16, 0.5, rng);
  write_mask_png(mask, m);
  auto r = run_cli("inpaint --checkpoint " + (trained() / "final").string() + " --image " + image.string() +
                 " --mask " + mask.string() + " --output " + output.string() + " --out " +
                 (workdir() / "inp").string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto in = read_raster(image), out = read_raster(output);
  REQUIRE(out.width == 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (m(y, x))
        for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == in.at(y, x, c));
  CHECK(fs::exists(workdir() / "inp" / "manifest.json"));
}

TEST_CASE("baseline with a generated center square") {
  Rng rng(902);
  const auto image = workdir() / "flat.png";
  write_png(image, ImageTensor(20, 20, 0.6));
  const auto dir = workdir() / "base";
  auto r = run_cli("baseline --image " + image.string() + " --scenario center-square --side 8 --grid --out " +
                 dir.string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto out = read_raster(dir / "inpainted.png");
  auto ref = read_raster(image);
  CHECK(out.samples == ref.samples);
  CHECK(fs::exists(dir / "grid.png"));

  CHECK(run_cli("baseline --image " + image.string()).code == 1);
  CHECK(run_cli("baseline --image " + image.string() + " --scenario nope").code == 1);
}

TEST_CASE("prepare writes a cache that train and eval can read") {
  const auto cache = workdir() / "cache";
  auto r = run_cli("prepare --synthetic 5 --out " + cache.string() + " --set image_side=16");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(cache / "train.wgar"));
  CHECK(fs::exists(cache / "eval.wgar"));
  CHECK(fs::exists(cache / "manifest.json"));
  auto t = run_cli("train --cache " + cache.string() + " --out " + (workdir() / "train_cached").string() + " " + kTiny);
  CHECK_MESSAGE(t.code == 0, t.err);
}

TEST_CASE("resume continues the step counter") {
  const auto dir = workdir() / "resumed";
  auto r = run_cli("train --synthetic 6 --seed 5 --resume " + (trained() / "final").string() + " --out " +
                 dir.string() + " " + kTiny + " max_steps=5");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(load_checkpoint(dir / "final").params.step == 5);
}

TEST_CASE("in-process dispatch matches the binary's exit codes") {
  std::ostringstream out, err;
  CHECK(dispatch({"wgain", "--help"}, out, err) == kExitOk);
  CHECK(dispatch({"wgain", "nope"}, out, err) == kExitValidation);
}

TEST_CASE("serve answers health checks and exits cleanly on SIGTERM") {
  const auto ckpt = (trained() / "final").string();
  const int port = 20000 + static_cast<int>(::getpid() % 20000);
  const std::string port_text = std::to_string(port);
  const pid_t pid = ::fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    ::execl(WGAIN_CLI_PATH, WGAIN_CLI_PATH, "--log-level", "off", "serve", "--checkpoint", ckpt.c_str(), "--port",
            port_text.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int attempt = 0; attempt < 100 && !res; ++attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    res = client.Get("/health");
  }
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["input_side"] == 16);
  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
}
