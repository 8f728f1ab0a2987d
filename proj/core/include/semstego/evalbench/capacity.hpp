#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semstego/evalbench/suite.hpp"
#include "semstego/training/stage_config.hpp"

namespace semstego::evalbench {

/// tokens : n_patches reduced by their gcd, e.g. (32, 64) → "1:2".
std::string compression_ratio(std::int64_t tokens, std::int64_t n_patches);

struct CapacityRow {
  std::int64_t tokens = 0;
  std::int64_t n_patches = 0;
  std::string ratio;
  /// Mean token count of the secrets actually used, when the hook knows it.
  double mean_secret_tokens = 0.0;
  Aggregate metrics;
};

struct CapacityPoint {
  Aggregate metrics;
  double mean_secret_tokens = 0.0;
};

struct CapacityHooks {
  /// Trains a fresh configuration for secrets of `tokens` tokens and
  /// evaluates it.
  std::function<CapacityPoint(std::int64_t tokens, const stegocore::Geometry& geometry)> train_and_evaluate;
};

/// One row per entry of `token_lengths`, in order. Without a hook the
/// metrics stay empty and only the ratio column is filled.
std::vector<CapacityRow> capacity_sweep(std::span<const std::int64_t> token_lengths,
                                        const stegocore::Geometry& geometry, const CapacityHooks& hooks = {});

/// Header "secret_tokens,compression_ratio,WER,BLEU,ROUGE,BERT-S,PSNR,SSIM".
void write_capacity_csv(std::ostream& out, const std::vector<CapacityRow>& rows);

struct DeskSweepOptions {
  /// Text the secrets are cut from, word by word.
  std::vector<std::string> pool;
  std::size_t n_secrets = 4;
  std::size_t n_covers = 4;
  training::StageConfig stage1 = training::StageConfig::desk(1);
  training::StageConfig stage2 = training::StageConfig::desk(2);
  stegocore::TinyTransformerConfig model;
  std::uint64_t seed = 0;
};

/// Secrets of at most `tokens` tokens: consecutive pool words, added while
/// the token count stays within budget.
std::vector<std::string> cut_secrets(const textproto::ByteBpeTokenizer& tokenizer,
                                     const std::vector<std::string>& pool, std::size_t n, std::int64_t tokens);

/// Tiny backbone, both training stages on synthetic covers, grid evaluation.
CapacityHooks desk_capacity_hooks(DeskSweepOptions options);

}  // namespace semstego::evalbench
