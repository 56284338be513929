#include "wgain/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <spdlog/spdlog.h>

#include "wgain/archive.hpp"
#include "wgain/errors.hpp"
#include "wgain/image_io.hpp"
#include "wgain/parallel.hpp"

namespace wgain {

void CorpusConfig::validate() const {
  if (target_side < 8) throw ValidationError("target_side must be >= 8");
  if (!(train_fraction > 0 && eval_fraction > 0 && train_fraction + eval_fraction <= 1.0 + 1e-12))
    throw ValidationError("split fractions must be positive and sum to at most 1");
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IngestionError("corpus directory " + dir.string() + " does not exist");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplitSizes split_sizes(std::size_t n, double train_fraction, double eval_fraction) {
  if (n == 0) return {0, 0};
  const auto round = [](double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); };
  const std::size_t train = std::clamp<std::size_t>(round(n * train_fraction), 1, n);
  const std::size_t eval = std::min(n - train, round(n * eval_fraction));
  return {train, eval};
}

CorpusSplit load_corpus(const CorpusConfig& cfg, const std::filesystem::path& explicit_dir) {
  cfg.validate();
  std::filesystem::path dir = cfg.source_dir;
  if (const char* env = std::getenv("WGAIN_DATA_DIR"); env && *env) dir = env;
  if (!explicit_dir.empty()) dir = explicit_dir;
  auto files = list_images(dir);
  if (files.empty()) throw IngestionError("no images found in " + dir.string());

  Rng rng = Rng::stream(cfg.shuffle_seed, "shuffle");
  for (std::size_t i = files.size(); i > 1; --i)
    std::swap(files[i - 1], files[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

  const auto sizes = split_sizes(files.size(), cfg.train_fraction, cfg.eval_fraction);
  if (sizes.eval == 0) spdlog::warn("corpus of {} image(s) leaves the eval split empty", files.size());
  CorpusSplit split;
  split.train.assign(files.begin(), files.begin() + static_cast<std::ptrdiff_t>(sizes.train));
  split.eval.assign(files.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                    files.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.eval));
  return split;
}

std::vector<ImageTensor> materialize(const std::vector<std::filesystem::path>& files, int target_side) {
  std::vector<ImageTensor> out(files.size());
  parallel_for(static_cast<std::ptrdiff_t>(files.size()), [&](std::ptrdiff_t i) {
    out[i] = preprocess_image(read_raster(files[i]), target_side);
  });
  return out;
}

namespace {

void fill_ramp(ImageTensor& img, Rng& rng) {
  // Each channel ramps between two levels along one axis and carries a sine
  // texture across the other axis. Channel 0 increases strictly along the ramp.
  const int s = img.height();
  const bool horizontal = rng.bernoulli(0.5);
  const double two_pi = 6.283185307179586;
  for (int c = 0; c < 3; ++c) {
    double a = rng.uniform(0.15, 0.4), b = rng.uniform(0.6, 0.85);
    if (c > 0 && rng.bernoulli(0.5)) std::swap(a, b);
    const double cycles = static_cast<double>(rng.uniform_int(2, 4));
    const double phase = rng.uniform(0.0, two_pi);
    const double amp = rng.uniform(0.05, 0.15);
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        const double t = (horizontal ? x : y) / static_cast<double>(s - 1);
        const double u = (horizontal ? y : x) / static_cast<double>(s);
        img(c, y, x) = a + (b - a) * t + amp * std::sin(two_pi * cycles * u + phase);
      }
  }
}

void fill_discs(ImageTensor& img, Rng& rng) {
  const int s = img.height();
  double bg[3], fg[3];
  for (int c = 0; c < 3; ++c) {
    bg[c] = rng.uniform(0.0, 1.0);
    fg[c] = rng.uniform(0.0, 1.0);
  }
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < img.tensor().plane(); ++i) img[c * img.tensor().plane() + i] = bg[c];
  const int discs = 1 + static_cast<int>(rng.uniform_int(0, 2));
  for (int d = 0; d < discs; ++d) {
    const double cy = rng.uniform(0.2, 0.8) * s, cx = rng.uniform(0.2, 0.8) * s;
    const double r = rng.uniform(0.12, 0.3) * s;
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x)
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r)
          for (int c = 0; c < 3; ++c) img(c, y, x) = fg[c];
  }
}

void fill_striped_rect(ImageTensor& img, Rng& rng) {
  const int s = img.height();
  double bg[3], c1[3], c2[3];
  for (int c = 0; c < 3; ++c) {
    bg[c] = rng.uniform(0.0, 1.0);
    c1[c] = rng.uniform(0.0, 1.0);
    c2[c] = rng.uniform(0.0, 1.0);
  }
  const int y0 = static_cast<int>(rng.uniform_int(0, s / 3)), x0 = static_cast<int>(rng.uniform_int(0, s / 3));
  const int y1 = static_cast<int>(rng.uniform_int(2 * s / 3, s)), x1 = static_cast<int>(rng.uniform_int(2 * s / 3, s));
  const int period = 2 + static_cast<int>(rng.uniform_int(0, std::max(1, s / 8)));
  const bool vertical = rng.bernoulli(0.5);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const bool inside = y >= y0 && y < y1 && x >= x0 && x < x1;
      const bool stripe = (((vertical ? x : y) / period) % 2) == 0;
      for (int c = 0; c < 3; ++c) img(c, y, x) = !inside ? bg[c] : stripe ? c1[c] : c2[c];
    }
}

}  // namespace

std::vector<ImageTensor> make_synthetic_corpus(int n, int side, Rng& rng) {
  if (n < 1) throw ValidationError("synthetic corpus needs n >= 1");
  if (side < 2) throw ValidationError("synthetic corpus side must be >= 2");
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    ImageTensor img(side, side);
    switch (i % 3) {
      case 0: fill_ramp(img, rng); break;
      case 1: fill_discs(img, rng); break;
      default: fill_striped_rect(img, rng); break;
    }
    out.push_back(std::move(img));
  }
  return out;
}

void write_corpus_cache(const std::filesystem::path& path, const std::vector<ImageTensor>& images,
                        const std::vector<std::string>& names) {
  std::vector<NamedArray> arrays;
  arrays.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    arrays.push_back({i < names.size() ? names[i] : "image" + std::to_string(i),
                      {3, img.height(), img.width()},
                      {img.data().begin(), img.data().end()}});
  }
  write_archive(path, arrays);
}

std::vector<ImageTensor> read_corpus_cache(const std::filesystem::path& path) {
  std::vector<ImageTensor> out;
  for (auto& a : read_archive(path)) {
    if (a.shape.size() != 3 || a.shape[0] != 3) throw IngestionError("corpus cache entry " + a.name + " is not an RGB image");
    Tensor t(3, static_cast<int>(a.shape[1]), static_cast<int>(a.shape[2]));
    std::copy(a.data.begin(), a.data.end(), t.data().begin());
    out.emplace_back(std::move(t));
  }
  return out;
}

}  // namespace wgain
