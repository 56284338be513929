#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wgain/rng.hpp"
#include "wgain/tensor.hpp"

namespace wgain {

struct CorpusConfig {
  std::filesystem::path source_dir;
  int target_side = 128;
  double train_fraction = 0.8;
  double eval_fraction = 0.2;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

/// Lazily loaded corpus: file paths, decoded on demand.
struct CorpusSplit {
  std::vector<std::filesystem::path> train;
  std::vector<std::filesystem::path> eval;
};

/// Image files (png, jpg, jpeg; case-insensitive) directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Split sizes for n items: train = round(n * train_fraction) clamped to
/// [1, n]; eval = min(n - train, round(n * eval_fraction)).
struct SplitSizes {
  std::size_t train, eval;
};
SplitSizes split_sizes(std::size_t n, double train_fraction, double eval_fraction);

/// Seeded shuffle of the directory listing followed by a train/eval split.
/// WGAIN_DATA_DIR, when set, replaces cfg.source_dir; a non-empty
/// `explicit_dir` (the --data-dir flag) wins over both.
CorpusSplit load_corpus(const CorpusConfig& cfg, const std::filesystem::path& explicit_dir = {});

/// Decodes and preprocesses files in parallel, preserving order.
std::vector<ImageTensor> materialize(const std::vector<std::filesystem::path>& files, int target_side);

/// Procedural images cycling through three families: linear colour ramps,
/// discs on a background, and striped rectangles.
std::vector<ImageTensor> make_synthetic_corpus(int n, int side, Rng& rng);

/// Packed cache of preprocessed images (the array archive format).
void write_corpus_cache(const std::filesystem::path& path, const std::vector<ImageTensor>& images,
                        const std::vector<std::string>& names);
std::vector<ImageTensor> read_corpus_cache(const std::filesystem::path& path);

}  // namespace wgain
