#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "semstego/stegocore/image.hpp"
#include "semstego/stegocore/tiny_transformer.hpp"
#include "semstego/training/stage_config.hpp"

namespace semstego::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kShortfall = 2,
  kParseFailure = 3,
  kUsage = 64,
};

/// Settings shared by the train and evaluate commands.
///
/// {
///   "model": {"preset": "tiny", "tiny": {...TinyTransformerConfig}},
///   "geometry": {"channels": 3, "height": 64, "width": 64, "patch": 16},
///   "stage1": {...StageConfig}, "stage2": {...StageConfig},
///   "train_manifest": "secrets.jsonl", "covers_dir": "", "synthetic_covers": 16,
///   "eval_manifest": "", "out_dir": "runs/default",
///   "seed": 0, "quantize": false, "clamp": "hard"
/// }
struct RunConfig {
  /// Only "tiny" is bundled.
  std::string model_preset = "tiny";
  stegocore::TinyTransformerConfig model;
  stegocore::Geometry geometry;
  training::StageConfig stage1 = training::StageConfig::desk(1);
  training::StageConfig stage2 = training::StageConfig::desk(2);
  std::filesystem::path train_manifest;
  /// Empty: use `synthetic_covers` procedural covers.
  std::filesystem::path covers_dir;
  std::size_t synthetic_covers = 16;
  std::filesystem::path eval_manifest;
  std::filesystem::path out_dir = "runs/default";
  std::uint64_t seed = 0;
  bool quantize = false;
  stegocore::ClampPolicy clamp = stegocore::ClampPolicy::hard;

  /// Geometry divisibility plus stage checks. Throws GeometryError or
  /// PreconditionError.
  void validate() const;

  /// Reads and validates a JSON file; relative paths resolve against the
  /// file's directory.
  static RunConfig load(const std::filesystem::path& file);
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

stegocore::ClampPolicy parse_clamp(std::string_view s);
std::string_view to_string(stegocore::ClampPolicy c);

}  // namespace semstego::cli
