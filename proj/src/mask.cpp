#include "wgain/mask.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "wgain/errors.hpp"

namespace wgain {

MaskMatrix::MaskMatrix(int height, int width, std::uint8_t fill) : h_(height), w_(width) {
  if (height <= 0 || width <= 0) throw ValidationError("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

void MaskMatrix::clear_rect(long y0, long x0, long hh, long ww) {
  const long y1 = std::min<long>(y0 + hh, h_), x1 = std::min<long>(x0 + ww, w_);
  for (long y = std::max(0L, y0); y < y1; ++y)
    for (long x = std::max(0L, x0); x < x1; ++x) bits_[static_cast<std::size_t>(y) * w_ + x] = 0;
}

std::size_t MaskMatrix::missing_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{0}));
}

double missing_fraction(const MaskMatrix& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>(m.missing_count()) / static_cast<double>(m.size());
}

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::noise: return "noise";
    case ScenarioKind::center_square: return "center-square";
    case ScenarioKind::multi_square: return "multi-square";
  }
  return "?";
}

std::string ScenarioSpec::label() const {
  std::ostringstream os;
  switch (kind) {
    case ScenarioKind::noise:
      if (variant == ScenarioVariant::train)
        os << "Noise train";
      else
        os << "Noise " << std::lround(noise_p * 100) << "%";
      break;
    case ScenarioKind::center_square: os << "Singlesquare"; break;
    case ScenarioKind::multi_square: os << "Multisquare"; break;
  }
  return os.str();
}

void ScenarioSpec::validate(int h, int w) const {
  if (h <= 0 || w <= 0) throw ValidationError("image dimensions must be positive");
  if (variant == ScenarioVariant::train) {
    if (!(noise_p_min >= 0.0 && noise_p_min <= noise_p_max && noise_p_max <= 1.0))
      throw ValidationError("training noise range must be a non-empty interval inside [0,1]");
    return;
  }
  switch (kind) {
    case ScenarioKind::noise:
      if (!(noise_p >= 0.0 && noise_p <= 1.0)) throw ValidationError("noise p must lie in [0,1]");
      break;
    case ScenarioKind::center_square:
    case ScenarioKind::multi_square:
      if (side <= 0 || side > std::min(h, w))
        throw ValidationError("square side must be in (0, min(h, w)]");
      if (kind == ScenarioKind::multi_square && count < 1)
        throw ValidationError("multi-square count must be >= 1");
      break;
  }
}

std::vector<ScenarioSpec> eval_scenarios(int side) {
  std::vector<ScenarioSpec> out;
  ScenarioSpec center;
  center.kind = ScenarioKind::center_square;
  center.side = side / 2;
  out.push_back(center);

  ScenarioSpec multi;
  multi.kind = ScenarioKind::multi_square;
  multi.count = 5;
  multi.side = std::max(1, static_cast<int>(std::lround(31.0 * side / 128.0)));
  out.push_back(multi);

  for (double p : {0.5, 0.75, 0.95}) {
    ScenarioSpec noise;
    noise.kind = ScenarioKind::noise;
    noise.noise_p = p;
    out.push_back(noise);
  }
  return out;
}

std::vector<ScenarioSpec> parse_scenarios(std::string_view list, int side) {
  const auto all = eval_scenarios(side);
  if (list == "all") return all;
  std::vector<ScenarioSpec> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto name = list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos);
    if (name == "center-square")
      out.push_back(all[0]);
    else if (name == "multi-square")
      out.push_back(all[1]);
    else if (name == "noise50")
      out.push_back(all[2]);
    else if (name == "noise75")
      out.push_back(all[3]);
    else if (name == "noise95")
      out.push_back(all[4]);
    else
      throw ValidationError("unknown scenario '" + std::string(name) + "'");
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

MaskMatrix gen_noise_mask(int h, int w, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("noise probability must lie in [0,1]");
  MaskMatrix m(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rng.bernoulli(p)) m.set(y, x, false);
  return m;
}

MaskMatrix gen_center_square_mask(int h, int w, int side) {
  if (side <= 0 || side > std::min(h, w))
    throw ValidationError("center square side must be in (0, min(h, w)]");
  MaskMatrix m(h, w, 1);
  m.clear_rect((h - side) / 2, (w - side) / 2, side, side);
  return m;
}

MaskMatrix gen_multi_square_mask_eval(int h, int w, int count, int side, Rng& rng) {
  if (count < 1) throw ValidationError("multi-square count must be >= 1");
  if (side <= 0 || side > std::min(h, w))
    throw ValidationError("square side must be in (0, min(h, w)]");
  MaskMatrix m(h, w, 1);
  for (int i = 0; i < count; ++i) {
    const auto y = rng.uniform_int(0, h - side);
    const auto x = rng.uniform_int(0, w - side);
    m.clear_rect(y, x, side, side);
  }
  return m;
}

MaskMatrix rasterize_train_squares(int l, std::span<const TrainSquare> squares) {
  MaskMatrix m(l, l, 1);
  for (const auto& s : squares) {
    // Pixel k (1-based) is covered when row <= k <= row + side.
    const long r0 = std::max(1L, static_cast<long>(std::ceil(s.row)));
    const long r1 = std::min<long>(l, static_cast<long>(std::floor(s.row + s.side)));
    const long c0 = std::max(1L, static_cast<long>(std::ceil(s.col)));
    const long c1 = std::min<long>(l, static_cast<long>(std::floor(s.col + s.side)));
    if (r0 > r1 || c0 > c1) continue;
    m.clear_rect(r0 - 1, c0 - 1, r1 - r0 + 1, c1 - c0 + 1);
  }
  return m;
}

MaskMatrix gen_multi_square_mask_train(int h, int w, Rng& rng) {
  if (h != w) throw ValidationError("training multi-square masks need a square image");
  const double l = h;
  std::vector<TrainSquare> squares(kTrainSquareCount);
  for (auto& s : squares) {
    s.row = rng.uniform(-2.0 * l, 3.0 * l);
    s.col = rng.uniform(-2.0 * l, 3.0 * l);
    s.side = rng.uniform(l / 5.0, l / 3.0);
  }
  return rasterize_train_squares(h, squares);
}

SideRange center_square_train_range(int l) {
  // [l/2.5, l/1.6] rounded inward; exact rational arithmetic avoids fp edge cases.
  const int lo = (2 * l + 4) / 5;  // ceil(2l/5)
  const int hi = (5 * l) / 8;      // floor(5l/8)
  return {lo, hi};
}

MaskMatrix sample_training_mask(const ScenarioSpec& spec, int h, int w, Rng& rng,
                                ScenarioKind* chosen) {
  if (spec.variant != ScenarioVariant::train)
    throw ContractError("sample_training_mask requires a train-variant scenario");
  spec.validate(h, w);
  const auto kind = static_cast<ScenarioKind>(rng.uniform_int(0, 2));
  if (chosen) *chosen = kind;
  switch (kind) {
    case ScenarioKind::noise:
      return gen_noise_mask(h, w, rng.uniform(spec.noise_p_min, spec.noise_p_max), rng);
    case ScenarioKind::center_square: {
      const auto r = center_square_train_range(std::min(h, w));
      return gen_center_square_mask(h, w, static_cast<int>(rng.uniform_int(r.lo, r.hi)));
    }
    case ScenarioKind::multi_square:
      return gen_multi_square_mask_train(h, w, rng);
  }
  return MaskMatrix::ones(h, w);
}

MaskMatrix sample_eval_mask(const ScenarioSpec& spec, int h, int w, Rng& rng) {
  if (spec.variant != ScenarioVariant::eval)
    throw ContractError("sample_eval_mask requires an eval-variant scenario");
  spec.validate(h, w);
  switch (spec.kind) {
    case ScenarioKind::noise: return gen_noise_mask(h, w, spec.noise_p, rng);
    case ScenarioKind::center_square: return gen_center_square_mask(h, w, spec.side);
    case ScenarioKind::multi_square:
      return gen_multi_square_mask_eval(h, w, spec.count, spec.side, rng);
  }
  return MaskMatrix::ones(h, w);
}

std::string encode_rle(const MaskMatrix& m) {
  std::ostringstream os;
  os << "RLE1 " << m.height() << ' ' << m.width() << '\n';
  std::uint8_t current = 1;
  std::size_t run = 0;
  bool first = true;
  auto flush = [&] {
    if (!first) os << ' ';
    os << run;
    first = false;
  };
  for (auto b : m.bits()) {
    if (b == current) {
      ++run;
    } else {
      flush();
      current = b;
      run = 1;
    }
  }
  flush();
  os << '\n';
  return os.str();
}

MaskMatrix decode_rle(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string magic;
  long h = 0, w = 0;
  if (!(is >> magic >> h >> w) || magic != "RLE1" || h <= 0 || w <= 0)
    throw ValidationError("malformed RLE mask header");
  MaskMatrix m(static_cast<int>(h), static_cast<int>(w), 1);
  const std::size_t total = static_cast<std::size_t>(h) * w;
  std::size_t pos = 0;
  bool valid = true;
  long long run;
  while (is >> run) {
    if (run < 0 || pos + static_cast<std::size_t>(run) > total)
      throw ValidationError("RLE runs overflow the mask");
    if (!valid)
      for (long long i = 0; i < run; ++i) m.set(static_cast<int>((pos + i) / w), static_cast<int>((pos + i) % w), false);
    pos += static_cast<std::size_t>(run);
    valid = !valid;
  }
  if (!is.eof()) throw ValidationError("malformed RLE run list");
  if (pos != total) throw ValidationError("RLE runs do not cover the mask");
  return m;
}

}  // namespace wgain
