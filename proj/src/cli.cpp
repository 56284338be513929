#include "wgain/cli.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "wgain/archive.hpp"
#include "wgain/biharmonic.hpp"
#include "wgain/checkpoint.hpp"
#include "wgain/config.hpp"
#include "wgain/corpus.hpp"
#include "wgain/errors.hpp"
#include "wgain/eval.hpp"
#include "wgain/image_io.hpp"
#include "wgain/service.hpp"
#include "wgain/trainer.hpp"

namespace wgain {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string out;
  std::vector<std::string> sets;
  std::string log_level = "info";
};

struct CorpusSource {
  std::string cache;   // directory written by `prepare`
  int synthetic = 0;   // procedural images instead of files
};

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string git_commit() {
  std::string out;
  if (FILE* p = popen("git rev-parse HEAD 2>/dev/null", "r")) {
    char buf[128];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    pclose(p);
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out;
}

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : RunConfig::load(g.config);
  for (const auto& s : g.sets) cfg.set_from_text(s);
  if (g.seed) cfg.set("seed", *g.seed);
  if (!g.data_dir.empty()) cfg.corpus.source_dir = g.data_dir;
  cfg.validate();
  return cfg;
}

bool config_pinned(const Globals& g) { return !g.config.empty() || !g.sets.empty(); }

fs::path out_dir(const Globals& g, const std::string& command, const RunConfig& cfg) {
  if (!g.out.empty()) return g.out;
  return fs::path("runs") / (timestamp() + "-" + command + "-" + fingerprint(cfg.to_flat_json()));
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    const RunConfig& cfg, nlohmann::json extra) {
  fs::create_directories(dir);
  nlohmann::json m = {{"command", command},
                      {"argv", args},
                      {"created", timestamp()},
                      {"git_commit", git_commit()},
                      {"config", cfg.to_flat_json()},
                      {"config_fingerprint", fingerprint(cfg.to_flat_json())},
                      {"seeds",
                       {{"seed", cfg.train.seed},
                        {"shuffle_seed", cfg.corpus.shuffle_seed},
                        {"streams", {"init", "mask", "noise", "shuffle", "eval-mask", "eval-noise"}}}}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

Model load_model(const Globals& g, const std::string& checkpoint, const RunConfig& cfg) {
  if (config_pinned(g)) return load_checkpoint(checkpoint, cfg.generator, cfg.critic);
  return load_checkpoint(checkpoint);
}

/// Train and eval image sets at `side`.
std::pair<std::vector<ImageTensor>, std::vector<ImageTensor>> load_images(const Globals& g, const CorpusSource& src,
                                                                        const RunConfig& cfg, int side,
                                                                        nlohmann::json& provenance) {
  if (!src.cache.empty()) {
    auto train = read_corpus_cache(fs::path(src.cache) / "train.wgar");
    auto eval = read_corpus_cache(fs::path(src.cache) / "eval.wgar");
    provenance = {{"cache", src.cache},
                  {"train_sha256", sha256_file(fs::path(src.cache) / "train.wgar")},
                  {"eval_sha256", sha256_file(fs::path(src.cache) / "eval.wgar")}};
    for (const auto* set : {&train, &eval})
      for (const auto& img : *set)
        if (img.height() != side || img.width() != side)
          throw ValidationError("cached images are " + std::to_string(img.height()) + " px but the model expects " +
                                std::to_string(side));
    return {std::move(train), std::move(eval)};
  }
  if (src.synthetic > 0) {
    Rng rng = Rng::stream(cfg.train.seed, "synthetic");
    auto all = make_synthetic_corpus(src.synthetic, side, rng);
    const auto sizes = split_sizes(all.size(), cfg.corpus.train_fraction, cfg.corpus.eval_fraction);
    std::vector<ImageTensor> train(all.begin(), all.begin() + sizes.train);
    std::vector<ImageTensor> eval(all.begin() + sizes.train, all.begin() + sizes.train + sizes.eval);
    provenance = {{"synthetic", src.synthetic}};
    return {std::move(train), std::move(eval)};
  }
  CorpusConfig cc = cfg.corpus;
  cc.target_side = side;
  auto split = load_corpus(cc, g.data_dir);
  provenance = {{"source_dir", split.train.empty() ? "" : split.train.front().parent_path().string()},
                {"train_files", split.train.size()},
                {"eval_files", split.eval.size()}};
  return {materialize(split.train, side), materialize(split.eval, side)};
}

std::vector<std::string> names_of(const std::vector<fs::path>& files) {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(f.filename().string());
  return out;
}

/// Input image at the model's side: exact-size images are kept as decoded,
/// other sizes are center-cropped and resized.
ImageTensor load_input_image(const std::string& path, int side) {
  Raster raw = read_raster(path);
  if (raw.height == side && raw.width == side) return raster_to_image(raw);
  spdlog::info("resizing {}x{} input to {}x{}", raw.width, raw.height, side, side);
  return preprocess_image(raw, side);
}

MaskMatrix resolve_mask(const std::string& mask_path, const std::string& scenario, int square_side, int side,
                        std::uint64_t seed) {
  if (!mask_path.empty() && !scenario.empty()) throw ValidationError("--mask and --scenario are exclusive");
  if (!mask_path.empty()) {
    MaskMatrix m = read_mask(mask_path);
    if (m.height() != side || m.width() != side)
      throw ValidationError("mask is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                            " but the image is " + std::to_string(side) + "x" + std::to_string(side));
    return m;
  }
  if (scenario.empty()) throw ValidationError("one of --mask or --scenario is required");
  auto specs = parse_scenarios(scenario, side);
  if (specs.size() != 1) throw ValidationError("--scenario must name a single scenario");
  ScenarioSpec spec = specs.front();
  if (square_side > 0) {
    if (spec.kind == ScenarioKind::noise) throw ValidationError("--side applies to square scenarios only");
    spec.side = square_side;
  }
  Rng rng = Rng::stream(seed, "mask");
  return sample_eval_mask(spec, side, side, rng);
}

// ------------------------------------------------------------------ commands

int cmd_prepare(const Globals& g, const CorpusSource& src, const std::vector<std::string>& args) {
  RunConfig cfg = resolve_config(g);
  const fs::path dir = out_dir(g, "prepare", cfg);
  fs::create_directories(dir);
  const int side = cfg.corpus.target_side;
  nlohmann::json extra;
  if (src.synthetic > 0) {
    nlohmann::json prov;
    auto [train, eval] = load_images(g, src, cfg, side, prov);
    write_corpus_cache(dir / "train.wgar", train, {});
    write_corpus_cache(dir / "eval.wgar", eval, {});
    extra["source"] = prov;
    extra["counts"] = {{"train", train.size()}, {"eval", eval.size()}};
  } else {
    auto split = load_corpus(cfg.corpus, g.data_dir);
    write_corpus_cache(dir / "train.wgar", materialize(split.train, side), names_of(split.train));
    write_corpus_cache(dir / "eval.wgar", materialize(split.eval, side), names_of(split.eval));
    extra["source"] = {{"train", names_of(split.train)}, {"eval", names_of(split.eval)}};
    extra["counts"] = {{"train", split.train.size()}, {"eval", split.eval.size()}};
  }
  extra["outputs"] = {{"train.wgar", sha256_file(dir / "train.wgar")}, {"eval.wgar", sha256_file(dir / "eval.wgar")}};
  write_manifest(dir, "prepare", args, cfg, extra);
  spdlog::info("wrote corpus cache to {}", dir.string());
  return kExitOk;
}

int cmd_train(const Globals& g, const CorpusSource& src, const std::string& resume,
              const std::vector<std::string>& args) {
  RunConfig cfg = resolve_config(g);
  const fs::path dir = out_dir(g, "train", cfg);
  Model model = resume.empty() ? Model::create(cfg.generator, cfg.critic, cfg.train.seed)
                               : load_model(g, resume, cfg);
  if (!resume.empty()) {
    cfg.generator = model.generator.config();
    cfg.critic = model.critic.config();
  }
  nlohmann::json prov;
  auto [train_set, eval_set] = load_images(g, src, cfg, model.input_side(), prov);
  if (train_set.empty()) throw ValidationError("training set is empty");
  nlohmann::json extra = {{"data", prov}, {"train_images", train_set.size()}};
  if (!resume.empty()) extra["resumed_from"] = {{"path", resume}, {"hash", model_hash(model)}};
  write_manifest(dir, "train", args, cfg, extra);

  TrainOptions opts;
  opts.out_dir = dir;
  opts.on_step = [&](const StepReport& r, const TrainerState&) {
    if (cfg.train.log_every > 0 && r.step % cfg.train.log_every == 0)
      spdlog::info("step {} critic {:.6g} generator {:.6g} recon {:.6g}", r.step, r.critic_objective,
                   r.generator_objective, r.recon_loss_value);
  };
  TrainResult result = train(train_set, std::move(model), cfg.train, opts);
  extra["final_checkpoint"] = {{"path", (dir / "final").string()}, {"hash", model_hash(result.model)}};
  extra["steps"] = result.model.params.step;
  write_manifest(dir, "train", args, cfg, extra);
  spdlog::info("final checkpoint {} ({} steps)", (dir / "final").string(), result.model.params.step);
  return kExitOk;
}

int cmd_eval(const Globals& g, const CorpusSource& src, const std::string& checkpoint, const std::string& scenarios,
             std::size_t examples, std::size_t samples, const std::vector<std::string>& args) {
  RunConfig cfg = resolve_config(g);
  Model model = load_model(g, checkpoint, cfg);
  const std::string hash = model_hash(model);
  const int side = model.input_side();
  auto specs = parse_scenarios(scenarios, side);
  nlohmann::json prov;
  auto [train, eval] = load_images(g, src, cfg, side, prov);
  if (eval.empty()) throw ValidationError("eval set is empty");

  EvalOptions opts;
  opts.sigma = cfg.train.sigma;
  opts.samples_per_image = samples;
  opts.keep_examples = examples;
  std::vector<GridRow> rows;
  EvalReport report = run_scenarios(model, eval, specs, cfg.train.seed, opts, &rows);

  const fs::path dir = g.out.empty() ? fs::path("runs") / (timestamp() + "-eval-" + report.fingerprint()) : fs::path(g.out);
  fs::create_directories(dir);
  write_table(report, dir / "table.csv", TableFormat::csv);
  write_table(report, dir / "table.txt", TableFormat::text);
  write_reference_table(dir / "reference_methods.csv");
  std::ofstream(dir / "report.json") << report.to_json().dump(2) << '\n';
  if (!rows.empty()) render_grid(rows, dir / "grid.png");
  write_manifest(dir, "eval", args, cfg,
                 {{"checkpoint", {{"path", checkpoint}, {"hash", hash}}},
                  {"data", prov},
                  {"eval_images", eval.size()},
                  {"report_fingerprint", report.fingerprint()}});
  if (model_hash(model) != hash) throw NumericalFault("evaluation modified the model");
  std::ifstream txt(dir / "table.txt");
  std::cout << txt.rdbuf();
  return kExitOk;
}

struct InpaintArgs {
  std::string image, mask, scenario, checkpoint, output;
  int side = 0;
  bool grid = false;
};

int cmd_inpaint(const Globals& g, const InpaintArgs& a, bool baseline, const std::vector<std::string>& args) {
  RunConfig cfg = resolve_config(g);
  std::optional<Model> model;
  int side;
  if (baseline) {
    Raster raw = read_raster(a.image);
    if (raw.height != raw.width && a.mask.empty())
      throw ValidationError("scenario masks need a square image");
    side = raw.height;
  } else {
    model = load_model(g, a.checkpoint, cfg);
    side = model->input_side();
  }
  ImageTensor x = baseline ? raster_to_image(read_raster(a.image)) : load_input_image(a.image, side);
  if (baseline) side = x.height();
  MaskMatrix m = resolve_mask(a.mask, a.scenario, a.side, side, cfg.train.seed);
  if (m.height() != x.height() || m.width() != x.width()) throw ValidationError("mask and image sizes differ");

  ImageTensor out;
  if (baseline) {
    out = biharmonic_inpaint(mask_image(x, m), m);
  } else {
    Rng noise = Rng::stream(cfg.train.seed, "noise");
    out = inpaint(*model, x, m, cfg.train.sigma, noise);
  }
  const std::string name = baseline ? "baseline" : "inpaint";
  fs::path output = a.output;
  fs::path dir;
  if (output.empty()) {
    dir = out_dir(g, name, cfg);
    output = dir / "inpainted.png";
  } else {
    dir = g.out.empty() ? (output.has_parent_path() ? output.parent_path() : fs::path(".")) : fs::path(g.out);
  }
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  fs::create_directories(dir);
  write_png(output, out);
  write_mask_png(dir / "mask.png", m);
  if (a.grid) {
    GridRow row{a.scenario.empty() ? "mask" : a.scenario, x, m, out, out};
    if (!baseline) row.biharmonic = biharmonic_inpaint(mask_image(x, m), m);
    render_grid({row}, dir / "grid.png");
  }
  nlohmann::json extra = {{"image", {{"path", a.image}, {"sha256", sha256_file(a.image)}}},
                          {"mask", a.mask.empty() ? nlohmann::json{{"scenario", a.scenario}, {"side", a.side}}
                                                  : nlohmann::json{{"path", a.mask}, {"sha256", sha256_file(a.mask)}}},
                          {"output", {{"path", output.string()}, {"sha256", sha256_file(output)}}},
                          {"missing_fraction", missing_fraction(m)}};
  if (model) extra["checkpoint"] = {{"path", a.checkpoint}, {"hash", model_hash(*model)}};
  write_manifest(dir, name, args, cfg, extra);
  spdlog::info("wrote {}", output.string());
  return kExitOk;
}

InferenceService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Globals& g, const std::string& checkpoint, const ServiceOptions& opts) {
  RunConfig cfg = resolve_config(g);
  Model model = load_model(g, checkpoint, cfg);
  const std::string hash = model_hash(model);
  ServiceOptions o = opts;
  o.sigma = cfg.train.sigma;
  InferenceService service(std::move(model), hash, o);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const int port = service.bind();
  if (port < 0) {
    g_service = nullptr;
    throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  spdlog::info("listening on {}:{}", o.host, port);
  service.serve_bound();
  g_service = nullptr;
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"WGAIN image inpainting toolkit", args.empty() ? "wgain" : args.front()};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Flat JSON config file");
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--data-dir", g.data_dir, "Image directory (default: WGAIN_DATA_DIR, then source_dir)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.sets, "Override one config key: key=value")->take_all();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

  CorpusSource src;
  auto add_source = [&src](CLI::App* sub) {
    sub->add_option("--cache", src.cache, "Corpus cache directory written by `prepare`");
    sub->add_option("--synthetic", src.synthetic, "Use N procedural images instead of files")->check(CLI::PositiveNumber);
  };

  auto* prepare = app.add_subcommand("prepare", "Preprocess a directory into a packed cache");
  prepare->add_option("--synthetic", src.synthetic, "Cache N procedural images")->check(CLI::PositiveNumber);

  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "Train generator and critic");
  add_source(train_cmd);
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");

  std::string checkpoint, scenarios = "all";
  std::size_t examples = 3, samples = 1;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the biharmonic baseline");
  add_source(eval);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--scenarios", scenarios, "all, or a comma list of center-square, multi-square, noise50, noise75, noise95");
  eval->add_option("--examples", examples, "Images per scenario in grid.png");
  eval->add_option("--samples", samples, "Noise draws per image")->check(CLI::PositiveNumber);

  InpaintArgs ia;
  auto add_inpaint = [&ia](CLI::App* sub) {
    sub->add_option("--image", ia.image, "Input image")->required();
    sub->add_option("--mask", ia.mask, "Mask PNG (0 = missing)");
    sub->add_option("--scenario", ia.scenario, "Generate an evaluation mask: center-square, multi-square, noise50, ...");
    sub->add_option("--side", ia.side, "Square side for square scenarios")->check(CLI::PositiveNumber);
    sub->add_option("--output", ia.output, "Output PNG (default: <out>/inpainted.png)");
    sub->add_flag("--grid", ia.grid, "Also write grid.png");
  };
  auto* inpaint_cmd = app.add_subcommand("inpaint", "Inpaint one image with a checkpoint");
  add_inpaint(inpaint_cmd);
  inpaint_cmd->add_option("--checkpoint", ia.checkpoint, "Checkpoint directory")->required();
  auto* baseline = app.add_subcommand("baseline", "Inpaint one image with the biharmonic baseline");
  add_inpaint(baseline);

  ServiceOptions so;
  auto* serve = app.add_subcommand("serve", "Serve a checkpoint over HTTP");
  serve->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  serve->add_option("--host", so.host, "Bind address");
  serve->add_option("--port", so.port, "Port (0 picks a free one)");
  serve->add_option("--max-payload-bytes", so.max_payload_bytes, "Request size limit");
  serve->add_flag("--allow-resize", so.allow_resize, "Resize inputs of another size instead of rejecting them");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));
  try {
    if (*prepare) return cmd_prepare(g, src, args);
    if (*train_cmd) return cmd_train(g, src, resume, args);
    if (*eval) return cmd_eval(g, src, checkpoint, scenarios, examples, samples, args);
    if (*inpaint_cmd) return cmd_inpaint(g, ia, false, args);
    if (*baseline) return cmd_inpaint(g, ia, true, args);
    if (*serve) return cmd_serve(g, checkpoint, so);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

int dispatch(int argc, char** argv) {
  return dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace wgain
