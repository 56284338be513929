#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wgain/mask.hpp"
#include "wgain/metrics.hpp"
#include "wgain/model.hpp"

namespace wgain {

/// Aggregate of one (scenario, method) cell.
struct EvalCell {
  double mean_psnr = 0;   // over finite samples; +inf when every sample was exact
  double mean_ssim = 0;
  std::size_t count = 0;  // samples evaluated
  std::size_t infinite_psnr = 0;  // samples excluded from mean_psnr
};

struct EvalRow {
  ScenarioSpec scenario;
  std::string label;
  EvalCell wgain;
  EvalCell biharmonic;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string checkpoint_hash;
  SsimParams ssim;
  std::uint64_t seed = 0;
  double sigma = 0.1;
  std::size_t samples_per_image = 1;

  nlohmann::json to_json() const;
  /// Hash of everything that determines the numbers (checkpoint, metric
  /// parameters, seeds, scenarios, eval-set size).
  std::string fingerprint() const;
};

/// Kept example for figure rendering.
struct GridRow {
  std::string label;
  ImageTensor truth;
  MaskMatrix mask;
  ImageTensor wgain;
  ImageTensor biharmonic;
};

struct EvalOptions {
  double sigma = 0.1;
  SsimParams ssim;
  /// Stochastic evaluation: average metrics over this many noise draws per image.
  std::size_t samples_per_image = 1;
  /// Number of images per scenario copied into `examples`.
  std::size_t keep_examples = 0;
};

/// Evaluates WGAIN and the biharmonic baseline on the same masks. Masks and
/// noise are seeded from (seed, scenario, image content), so results do not
/// depend on the order of the eval set.
EvalReport run_scenarios(const Model& model, const std::vector<ImageTensor>& eval_set,
                         const std::vector<ScenarioSpec>& scenarios, std::uint64_t seed,
                         const EvalOptions& options = {}, std::vector<GridRow>* examples = nullptr);

/// Rows = examples, columns = truth | damaged | WGAIN | biharmonic; labels are
/// drawn in a strip left of each row. Missing pixels of the damaged tile are
/// mid-gray.
void render_grid(const std::vector<GridRow>& rows, const std::filesystem::path& path);

enum class TableFormat { csv, text };

/// Table with one row per scenario and PSNR/SSIM columns for both methods.
void write_table(const EvalReport& report, const std::filesystem::path& path, TableFormat format);

struct TableRow {
  std::string label;
  double wgain_psnr, wgain_ssim, biharmonic_psnr, biharmonic_ssim;
};
std::vector<TableRow> read_table_csv(const std::filesystem::path& path);

/// Published single-square results of other methods, quoted as static rows.
struct ReferenceResult {
  const char* method;
  const char* dataset;
  const char* psnr;  // "-" when not reported
  const char* ssim;
};
const std::vector<ReferenceResult>& reference_results();
void write_reference_table(const std::filesystem::path& path);

}  // namespace wgain
