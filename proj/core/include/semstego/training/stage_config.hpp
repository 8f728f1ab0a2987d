#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <nlohmann/json.hpp>

#include "semstego/stegocore/tiny_transformer.hpp"

namespace semstego::training {

enum class Schedule { cosine, constant };

/// How the stego image is bounded inside the Stage-2 graph.
enum class TrainClamp {
  /// clamp to [0,1]; gradient is identity inside the range, zero outside.
  straight_through,
  none,
};

struct StageConfig {
  int stage = 1;
  double learning_rate = 2e-4;
  double weight_decay = 0.01;
  std::int64_t warmup_steps = 500;
  Schedule schedule = Schedule::cosine;
  std::int64_t batch_size = 14;
  /// Optimizer steps. When `epochs` > 0 it wins: steps = epochs·ceil(n/batch).
  std::int64_t steps = 0;
  std::int64_t epochs = 0;
  double lambda_text = 1.0;
  double lambda_emb = 1.0;
  /// Per-example mask ratio R ~ U[lo, hi] on the Stage-1 decode features.
  std::array<double, 2> mask_ratio_range{0.0, 0.5};
  stegocore::LoraConfig lora;
  TrainClamp clamp = TrainClamp::straight_through;
  /// Stage 1 only: insert into covers during Stage 1 (single-stage ablation).
  bool with_covers = false;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] std::int64_t resolve_steps(std::size_t n_examples) const;
  [[nodiscard]] bool mask_enabled() const { return mask_ratio_range[1] > 0.0; }

  /// Optimizer/LoRA settings of the reference setup, no step budget.
  static StageConfig defaults(int stage);
  /// Memorization budget for the built-in tiny backbone on one CPU core.
  static StageConfig desk(int stage);
  /// Batch 14; one epoch for Stage 1, 6000 iterations for Stage 2.
  static StageConfig full_scale(int stage);
};

/// Multiplier on the base learning rate at optimizer step `step` (0-based).
double lr_factor(const StageConfig& cfg, std::int64_t step, std::int64_t total_steps);

std::string_view to_string(Schedule s);
std::string_view to_string(TrainClamp c);

void to_json(nlohmann::json& j, const StageConfig& c);
void from_json(const nlohmann::json& j, StageConfig& c);

}  // namespace semstego::training
