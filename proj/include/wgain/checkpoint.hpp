#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "wgain/model.hpp"

namespace wgain {

inline constexpr int kCheckpointVersion = 1;

/// Content hash over parameter names, shapes and values of both networks and
/// the step counter.
std::string model_hash(const Model& model);

/// Writes <dir>/manifest.json and <dir>/params.wgar; returns the content hash.
std::string save_checkpoint(const std::filesystem::path& dir, const Model& model);

/// Loads a checkpoint. When expected configs are given, any difference from
/// the stored configs is a LoadError. Tensor hashes are verified.
Model load_checkpoint(const std::filesystem::path& dir,
                      const std::optional<GeneratorConfig>& expect_generator = std::nullopt,
                      const std::optional<CriticConfig>& expect_critic = std::nullopt);

}  // namespace wgain
