#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semstego/stegocore/pipeline.hpp"

namespace semstego::training {

/// Everything needed to rebuild a trained unit.
///
/// On disk: 8-byte magic "SEMSTCKP", little-endian uint64 manifest length,
/// the JSON manifest, then the raw little-endian float32 tensor payloads in
/// manifest order. The manifest lists name, shape, byte offset, byte count
/// and CRC-32 of every tensor.
struct Checkpoint {
  stegocore::UnitConfig unit;
  nlohmann::json tokenizer;
  textproto::PromptTemplates templates;
  textproto::SpecialTokenSet specials;
  int stage = 0;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  nlohmann::json stage_config;
  /// Fixed batch and its Stage-1 loss (mask off) at save time.
  std::vector<std::string> eval_batch;
  double eval_loss = 0.0;
  stegocore::NamedTensors tensors;
};

/// Snapshot of the unit's current weights. `eval_batch` may be empty.
Checkpoint capture_checkpoint(stegocore::StegoUnit& unit, int stage, std::int64_t step, std::uint64_t seed,
                              const nlohmann::json& stage_config, std::vector<std::string> eval_batch);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws FormatError on bad magic, truncation or checksum mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Fresh unit carrying the checkpoint's weights.
std::unique_ptr<stegocore::StegoUnit> restore_unit(const Checkpoint& ckpt);

/// Copies checkpoint weights into an existing unit of matching layout.
void load_weights(stegocore::StegoUnit& unit, const Checkpoint& ckpt);

/// Stage-1 loss (mask off, eval mode, no autograd) on `batch`.
double evaluation_loss(stegocore::StegoUnit& unit, const std::vector<std::string>& batch);

/// Recomputes the eval loss on a restored unit; true when it matches the
/// stored value to `rel_tol` relative.
bool verify_eval_loss(stegocore::StegoUnit& unit, const Checkpoint& ckpt, double rel_tol = 1e-5);

/// CRC-32 of each tensor's bytes, keyed by name.
std::map<std::string, std::uint32_t> tensor_checksums(const stegocore::NamedTensors& tensors);
std::uint32_t tensor_crc32(const torch::Tensor& t);

}  // namespace semstego::training
