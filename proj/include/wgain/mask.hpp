#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wgain/rng.hpp"

namespace wgain {

/// Binary validity grid: 1 = valid pixel, 0 = missing pixel.
class MaskMatrix {
 public:
  MaskMatrix() = default;
  MaskMatrix(int height, int width, std::uint8_t fill = 1);

  static MaskMatrix ones(int h, int w) { return MaskMatrix(h, w, 1); }
  static MaskMatrix zeros(int h, int w) { return MaskMatrix(h, w, 0); }

  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t size() const { return bits_.size(); }

  std::uint8_t operator()(int y, int x) const { return bits_[static_cast<std::size_t>(y) * w_ + x]; }
  void set(int y, int x, bool valid) { bits_[static_cast<std::size_t>(y) * w_ + x] = valid ? 1 : 0; }
  bool valid(std::size_t i) const { return bits_[i] != 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Marks the rectangle [y0, y0 + hh) x [x0, x0 + ww), clipped to the grid, as missing.
  void clear_rect(long y0, long x0, long hh, long ww);

  std::size_t missing_count() const;

  friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;

 private:
  int h_ = 0, w_ = 0;
  std::vector<std::uint8_t> bits_;
};

double missing_fraction(const MaskMatrix& m);

enum class ScenarioKind { noise, center_square, multi_square };
enum class ScenarioVariant { train, eval };

std::string_view to_string(ScenarioKind k);

/// Parameters of one missingness distribution. Eval specs carry fixed values;
/// train specs use the randomized ranges.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::noise;
  ScenarioVariant variant = ScenarioVariant::eval;
  double noise_p = 0.5;
  double noise_p_min = 0.5, noise_p_max = 0.95;
  int side = 64;            // center square / eval multi-square side
  int count = 5;            // eval multi-square count
  std::uint64_t seed = 0;

  /// Human-readable label, e.g. "Noise 75%".
  std::string label() const;
  void validate(int h, int w) const;
};

/// The five evaluation scenarios scaled to an image side:
/// center square of side/2, five squares of round(31 * side / 128), noise 50/75/95%.
std::vector<ScenarioSpec> eval_scenarios(int side);

/// Parses "noise50", "noise75", "noise95", "center-square", "multi-square" or "all".
std::vector<ScenarioSpec> parse_scenarios(std::string_view list, int side);

MaskMatrix gen_noise_mask(int h, int w, double p, Rng& rng);
MaskMatrix gen_center_square_mask(int h, int w, int side);
MaskMatrix gen_multi_square_mask_eval(int h, int w, int count, int side, Rng& rng);
MaskMatrix gen_multi_square_mask_train(int h, int w, Rng& rng);

/// One training square in continuous 1-based image coordinates.
struct TrainSquare {
  double row, col, side;
};
/// Pixels (1-based) inside [row, row + side] x [col, col + side] of any square
/// become missing; squares outside [1, l]^2 contribute nothing.
MaskMatrix rasterize_train_squares(int l, std::span<const TrainSquare> squares);
inline constexpr int kTrainSquareCount = 30;

/// Draws one of the three kinds uniformly, then a mask from its training
/// distribution. `chosen`, when given, receives the kind that was drawn.
MaskMatrix sample_training_mask(const ScenarioSpec& spec, int h, int w, Rng& rng,
                                ScenarioKind* chosen = nullptr);

/// Mask for an eval-variant spec.
MaskMatrix sample_eval_mask(const ScenarioSpec& spec, int h, int w, Rng& rng);

/// Integer bounds of the training center-square side for image side `l`.
struct SideRange {
  int lo, hi;
};
SideRange center_square_train_range(int l);

/// Run-length text form: "RLE1 <h> <w>\n" followed by run lengths over the
/// row-major bits, alternating and starting with a run of valid pixels.
std::string encode_rle(const MaskMatrix& m);
MaskMatrix decode_rle(std::string_view text);

}  // namespace wgain
