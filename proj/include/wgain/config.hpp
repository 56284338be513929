#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "wgain/corpus.hpp"
#include "wgain/model.hpp"
#include "wgain/trainer.hpp"

namespace wgain {

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const CriticConfig& c);
void from_json(const nlohmann::json& j, CriticConfig& c);

/// Every tunable of a run. Serialized as one flat JSON object whose keys are
/// listed by `RunConfig::keys()`; unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  GeneratorConfig generator;
  CriticConfig critic;
  CorpusConfig corpus;

  /// Sets one key from a typed JSON value.
  void set(std::string_view key, const nlohmann::json& value);
  /// Sets one key from command-line text ("key=value"); the value is parsed
  /// as JSON when possible, else taken as a string.
  void set_from_text(std::string_view assignment);
  /// Applies every key of a flat JSON object.
  void apply(const nlohmann::json& flat);
  nlohmann::json to_flat_json() const;
  void validate() const;

  static const std::vector<std::string>& keys();
  static RunConfig load(const std::filesystem::path& path);
};

/// Short stable fingerprint (first 12 hex digits of SHA-256) of a JSON document.
std::string fingerprint(const nlohmann::json& j);

}  // namespace wgain
