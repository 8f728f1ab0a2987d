#include "semstego/training/stage_config.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "semstego/common/errors.hpp"

namespace semstego::training {

void StageConfig::validate() const {
  if (stage != 1 && stage != 2) throw PreconditionError("stage must be 1 or 2");
  if (!(learning_rate > 0.0)) throw PreconditionError("learning_rate must be positive");
  if (weight_decay < 0.0) throw PreconditionError("weight_decay must be non-negative");
  if (warmup_steps < 0) throw PreconditionError("warmup_steps must be non-negative");
  if (batch_size < 1) throw PreconditionError("batch_size must be at least 1");
  if (steps < 0 || epochs < 0) throw PreconditionError("steps/epochs must be non-negative");
  const auto [lo, hi] = mask_ratio_range;
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw PreconditionError("mask_ratio_range must satisfy 0 <= lo <= hi <= 1");
  if (lambda_text < 0.0 || lambda_emb < 0.0) throw PreconditionError("loss weights must be non-negative");
  if (lora.rank < 1) throw PreconditionError("LoRA rank must be positive");
}

std::int64_t StageConfig::resolve_steps(std::size_t n_examples) const {
  if (epochs == 0) return steps;
  const auto n = static_cast<std::int64_t>(n_examples);
  return epochs * ((n + batch_size - 1) / batch_size);
}

StageConfig StageConfig::defaults(int stage) {
  StageConfig c;
  c.stage = stage;
  if (stage == 2) c.mask_ratio_range = {0.0, 0.0};
  return c;
}

StageConfig StageConfig::desk(int stage) {
  auto c = defaults(stage);
  c.batch_size = 16;
  c.warmup_steps = 100;
  c.steps = stage == 1 ? 4000 : 1000;
  return c;
}

StageConfig StageConfig::full_scale(int stage) {
  auto c = defaults(stage);
  c.batch_size = 14;
  if (stage == 1) {
    c.epochs = 1;
  } else {
    c.steps = 6000;
  }
  return c;
}

double lr_factor(const StageConfig& cfg, std::int64_t step, std::int64_t total_steps) {
  if (cfg.schedule == Schedule::constant) return 1.0;
  const auto w = cfg.warmup_steps;
  if (step < w) return static_cast<double>(step + 1) / static_cast<double>(w);
  const auto span = std::max<std::int64_t>(1, total_steps - w);
  const double progress = std::min(1.0, static_cast<double>(step - w) / static_cast<double>(span));
  return 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::string_view to_string(Schedule s) { return s == Schedule::cosine ? "cosine" : "constant"; }
std::string_view to_string(TrainClamp c) { return c == TrainClamp::straight_through ? "straight_through" : "none"; }

void to_json(nlohmann::json& j, const StageConfig& c) {
  j = {{"stage", c.stage},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"warmup_steps", c.warmup_steps},
       {"schedule", std::string(to_string(c.schedule))},
       {"batch_size", c.batch_size},
       {"steps", c.steps},
       {"epochs", c.epochs},
       {"lambda_text", c.lambda_text},
       {"lambda_emb", c.lambda_emb},
       {"mask_ratio_range", c.mask_ratio_range},
       {"lora", c.lora},
       {"clamp", std::string(to_string(c.clamp))},
       {"with_covers", c.with_covers},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, StageConfig& c) {
  const int stage = j.value("stage", c.stage);
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "desk") {
      c = StageConfig::desk(stage);
    } else if (preset == "full_scale") {
      c = StageConfig::full_scale(stage);
    } else if (preset == "defaults") {
      c = StageConfig::defaults(stage);
    } else {
      throw FormatError("unknown stage preset '" + preset + "'");
    }
  }
  c.stage = stage;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  if (j.contains("schedule")) {
    const auto s = j.at("schedule").get<std::string>();
    if (s == "cosine") {
      c.schedule = Schedule::cosine;
    } else if (s == "constant") {
      c.schedule = Schedule::constant;
    } else {
      throw FormatError("unknown schedule '" + s + "'");
    }
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.epochs = j.value("epochs", c.epochs);
  c.lambda_text = j.value("lambda_text", c.lambda_text);
  c.lambda_emb = j.value("lambda_emb", c.lambda_emb);
  if (j.contains("mask_ratio_range")) c.mask_ratio_range = j.at("mask_ratio_range").get<std::array<double, 2>>();
  if (j.contains("lora")) c.lora = j.at("lora").get<stegocore::LoraConfig>();
  if (j.contains("clamp")) {
    const auto s = j.at("clamp").get<std::string>();
    if (s == "straight_through") {
      c.clamp = TrainClamp::straight_through;
    } else if (s == "none") {
      c.clamp = TrainClamp::none;
    } else {
      throw FormatError("unknown training clamp '" + s + "'");
    }
  }
  c.with_covers = j.value("with_covers", c.with_covers);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

}  // namespace semstego::training
