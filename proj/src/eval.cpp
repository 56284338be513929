#include "wgain/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "wgain/archive.hpp"
#include "wgain/biharmonic.hpp"
#include "wgain/checkpoint.hpp"
#include "wgain/config.hpp"
#include "wgain/errors.hpp"
#include "wgain/parallel.hpp"

namespace wgain {

namespace {

std::uint64_t content_key(const ImageTensor& img) {
  std::string hex = sha256_hex(img.data());
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

struct ImageResult {
  std::uint64_t key;
  std::size_t index;
  double wgain_psnr, wgain_ssim, bh_psnr, bh_ssim;
};

EvalCell summarize(const std::vector<ImageResult>& samples, bool wgain) {
  EvalCell c;
  double psum = 0, ssum = 0;
  std::size_t finite = 0;
  for (const auto& s : samples) {
    double p = wgain ? s.wgain_psnr : s.bh_psnr;
    ssum += wgain ? s.wgain_ssim : s.bh_ssim;
    if (std::isinf(p)) {
      ++c.infinite_psnr;
    } else {
      psum += p;
      ++finite;
    }
  }
  c.count = samples.size();
  c.mean_ssim = samples.empty() ? std::numeric_limits<double>::quiet_NaN() : ssum / double(samples.size());
  if (finite > 0)
    c.mean_psnr = psum / double(finite);
  else
    c.mean_psnr = samples.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : std::numeric_limits<double>::infinity();
  return c;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

nlohmann::json cell_json(const EvalCell& c) {
  return {{"mean_psnr", number(c.mean_psnr)},
          {"mean_ssim", number(c.mean_ssim)},
          {"count", c.count},
          {"infinite_psnr", c.infinite_psnr}};
}

std::string fmt(double v, const char* spec) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw ValidationError("malformed number in table: " + s);
  return v;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json spec = {{"kind", std::string(to_string(r.scenario.kind))},
                           {"noise_p", r.scenario.noise_p},
                           {"side", r.scenario.side},
                           {"count", r.scenario.count}};
    rows_json.push_back({{"scenario", r.label},
                         {"spec", spec},
                         {"wgain", cell_json(r.wgain)},
                         {"biharmonic", cell_json(r.biharmonic)}});
  }
  return {{"checkpoint_hash", checkpoint_hash},
          {"seed", seed},
          {"sigma", sigma},
          {"samples_per_image", samples_per_image},
          {"ssim",
           {{"window", ssim.window},
            {"k1", ssim.k1},
            {"k2", ssim.k2},
            {"data_range", ssim.data_range},
            {"sample_covariance", ssim.sample_covariance}}},
          {"rows", rows_json}};
}

std::string EvalReport::fingerprint() const {
  nlohmann::json j = to_json();
  for (auto& r : j["rows"]) {
    r.erase("wgain");
    r.erase("biharmonic");
    r["n"] = 0;
  }
  std::size_t n = rows.empty() ? 0 : rows.front().wgain.count;
  j["n"] = n;
  return wgain::fingerprint(j);
}

EvalReport run_scenarios(const Model& model, const std::vector<ImageTensor>& eval_set,
                         const std::vector<ScenarioSpec>& scenarios, std::uint64_t seed,
                         const EvalOptions& options, std::vector<GridRow>* examples) {
  if (options.samples_per_image == 0) throw ValidationError("samples_per_image must be positive");
  const int side = model.input_side();
  for (const auto& img : eval_set)
    if (img.height() != side || img.width() != side)
      throw ValidationError("eval image size does not match the model input size");

  EvalReport report;
  report.seed = seed;
  report.checkpoint_hash = model_hash(model);
  report.sigma = options.sigma;
  report.ssim = options.ssim;
  report.samples_per_image = options.samples_per_image;

  std::vector<std::uint64_t> keys(eval_set.size());
  parallel_for(static_cast<std::ptrdiff_t>(eval_set.size()),
               [&](std::ptrdiff_t i) { keys[i] = content_key(eval_set[i]); });

  const Rng mask_base = Rng::stream(seed, "eval-mask");
  const Rng noise_base = Rng::stream(seed, "eval-noise");

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const ScenarioSpec& spec = scenarios[s];
    spec.validate(side, side);
    const std::size_t n = eval_set.size();
    const std::size_t k = options.samples_per_image;
    std::vector<ImageResult> samples(n * k);
    std::vector<MaskMatrix> masks(n);
    std::vector<ImageTensor> wgain_out(n), bh_out(n);

    parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
      const ImageTensor& x = eval_set[i];
      Rng mask_rng = mask_base.split(s).split(keys[i]);
      MaskMatrix m = sample_eval_mask(spec, side, side, mask_rng);
      ImageTensor bh = biharmonic_inpaint(mask_image(x, m), m);
      PairMetrics bm = evaluate_pair(x, bh, m, options.ssim);
      for (std::size_t j = 0; j < k; ++j) {
        Rng noise_rng = noise_base.split(s).split(keys[i]).split(j);
        ImageTensor out = inpaint(model, x, m, options.sigma, noise_rng);
        PairMetrics wm = evaluate_pair(x, out, m, options.ssim);
        samples[i * k + j] = {keys[i], static_cast<std::size_t>(i), wm.psnr, wm.ssim, bm.psnr, bm.ssim};
        if (j == 0) wgain_out[i] = std::move(out);
      }
      masks[i] = std::move(m);
      bh_out[i] = std::move(bh);
    });

    // Sum in content order so the means are bit-identical under reordering.
    std::stable_sort(samples.begin(), samples.end(),
                     [](const ImageResult& a, const ImageResult& b) { return a.key < b.key; });
    EvalRow row;
    row.scenario = spec;
    row.label = spec.label();
    row.wgain = summarize(samples, true);
    row.biharmonic = summarize(samples, false);
    report.rows.push_back(std::move(row));

    if (examples) {
      for (std::size_t i = 0; i < std::min(n, options.keep_examples); ++i)
        examples->push_back({spec.label(), eval_set[i], masks[i], wgain_out[i], bh_out[i]});
    }
  }
  return report;
}

void render_grid(const std::vector<GridRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw ValidationError("render_grid needs at least one row");
  const int th = rows.front().truth.height(), tw = rows.front().truth.width();
  const int gap = 4, label_w = 96, header_h = 14;
  const int cols = 4;
  const int W = label_w + cols * (tw + gap);
  const int H = header_h + static_cast<int>(rows.size()) * (th + gap);
  cv::Mat canvas(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
  const char* headers[cols] = {"truth", "damaged", "WGAIN", "biharmonic"};
  const double font = 0.3;
  for (int c = 0; c < cols; ++c)
    cv::putText(canvas, headers[c], {label_w + c * (tw + gap), header_h - 4}, cv::FONT_HERSHEY_SIMPLEX, font,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);

  auto blit = [&](const ImageTensor& img, const MaskMatrix* hole, int y0, int x0) {
    if (img.height() != th || img.width() != tw) throw ValidationError("grid tiles must share one size");
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x) {
        bool gray = hole && !hole->valid(y * tw + x);
        auto& px = canvas.at<cv::Vec3b>(y0 + y, x0 + x);
        for (int ch = 0; ch < 3; ++ch) {
          double v = gray ? 0.5 : std::clamp(img(ch, y, x), 0.0, 1.0);
          px[2 - ch] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
      }
  };

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int y0 = header_h + static_cast<int>(r) * (th + gap);
    cv::putText(canvas, rows[r].label, {2, y0 + th / 2 + 4}, cv::FONT_HERSHEY_SIMPLEX, font, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
    blit(rows[r].truth, nullptr, y0, label_w);
    blit(rows[r].truth, &rows[r].mask, y0, label_w + (tw + gap));
    blit(rows[r].wgain, nullptr, y0, label_w + 2 * (tw + gap));
    blit(rows[r].biharmonic, nullptr, y0, label_w + 3 * (tw + gap));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) throw std::runtime_error("cannot write " + path.string());
}

void write_table(const EvalReport& report, const std::filesystem::path& path, TableFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (format == TableFormat::csv) {
    out << "damage_type,wgain_psnr,wgain_ssim,biharmonic_psnr,biharmonic_ssim\n";
    for (const auto& r : report.rows)
      out << r.label << ',' << fmt(r.wgain.mean_psnr, "%.17g") << ',' << fmt(r.wgain.mean_ssim, "%.17g") << ','
          << fmt(r.biharmonic.mean_psnr, "%.17g") << ',' << fmt(r.biharmonic.mean_ssim, "%.17g") << '\n';
    return;
  }
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %12s %12s %17s %17s\n", "Damage type", "WGAIN PSNR", "WGAIN SSIM",
                "Biharmonic PSNR", "Biharmonic SSIM");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-14s %12s %12s %17s %17s\n", r.label.c_str(),
                  fmt(r.wgain.mean_psnr, "%.2f").c_str(), fmt(r.wgain.mean_ssim, "%.2f").c_str(),
                  fmt(r.biharmonic.mean_psnr, "%.2f").c_str(), fmt(r.biharmonic.mean_ssim, "%.2f").c_str());
    out << line;
  }
}

std::vector<TableRow> read_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "damage_type,wgain_psnr,wgain_ssim,biharmonic_psnr,biharmonic_ssim")
    throw ValidationError("unexpected table header: " + line);
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 5) throw ValidationError("table row must have 5 fields: " + line);
    rows.push_back({f[0], parse_number(f[1]), parse_number(f[2]), parse_number(f[3]), parse_number(f[4])});
  }
  return rows;
}

const std::vector<ReferenceResult>& reference_results() {
  static const std::vector<ReferenceResult> rows = {
      {"PiiGAN", "CelebA-HQ", "34.99", "0.99"},
      {"DMFN", "CelebA-HQ", "26.50", "0.89"},
      {"DMFN", "Paris StreetView", "25.00", "0.86"},
      {"CE", "Paris StreetView", "18.58", "-"},
      {"WGAIN", "CelebA", "25.96", "0.92"},
      {"WGAIN", "Paris StreetView", "25.00", "0.88"},
  };
  return rows;
}

void write_reference_table(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "method,dataset,psnr,ssim\n";
  for (const auto& r : reference_results())
    out << r.method << ',' << r.dataset << ',' << r.psnr << ',' << r.ssim << '\n';
}

}  // namespace wgain
