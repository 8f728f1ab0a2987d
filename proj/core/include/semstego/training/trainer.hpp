#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "semstego/stegocore/pipeline.hpp"
#include "semstego/training/checkpoint.hpp"
#include "semstego/training/stage_config.hpp"

namespace semstego::training {

struct LossRecord {
  std::int64_t step = 0;
  double l_txt = 0.0;
  double l_emb = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

/// Tab-separated, one record per optimizer step: step, l_txt, l_emb, lr.
void write_loss_log_header(std::ostream& out);
void write_loss_record(std::ostream& out, const LossRecord& r);

struct StepLosses {
  torch::Tensor l_txt;
  torch::Tensor l_emb;
  torch::Tensor total;
};

/// Stage-1 objective on one batch. `mask_ratios` holds one R per example, or
/// is empty for no masking. With `covers` ([B,C,H,W], the single-stage
/// ablation) the residual is inserted into them before the decode path.
StepLosses stage1_losses(stegocore::StegoUnit& unit, const std::vector<textproto::WrappedMessage>& batch,
                         const std::vector<double>& mask_ratios, std::mt19937_64& rng, const StageConfig& cfg,
                         const torch::Tensor* covers = nullptr);

/// Stage-2 objective: SMEs → T2P → insert into `covers` ([B,C,H,W]) →
/// patchify → P2T → decode. `smes` is [B,N,d_emb] and carries no graph.
StepLosses stage2_losses(stegocore::StegoUnit& unit, const torch::Tensor& smes,
                         const std::vector<textproto::WrappedMessage>& batch, const torch::Tensor& covers,
                         const StageConfig& cfg);

struct TrainHooks {
  /// Called after every optimizer step.
  std::function<void(const LossRecord&)> on_step;
  /// Loss log sink; the header is written before the first step.
  std::ostream* log = nullptr;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<LossRecord> log;
};

/// Parameters updated in `stage` (1: LoRA, token embeddings, LM head and
/// both projectors; 2: T2P only).
stegocore::NamedTensors stage_parameters(stegocore::StegoUnit& unit, int stage);

/// Trains in place. Throws PreconditionError on an empty secret list and
/// DivergenceError on a non-finite loss.
TrainOutcome train_stage1(stegocore::StegoUnit& unit, const std::vector<std::string>& secrets,
                          const StageConfig& cfg, const std::vector<stegocore::ImageTensor>* covers = nullptr,
                          const TrainHooks& hooks = {});

/// Trains only T2P; the backbone and P2T run frozen in eval mode.
TrainOutcome train_stage2(stegocore::StegoUnit& unit, const std::vector<stegocore::ImageTensor>& covers,
                          const std::vector<std::string>& secrets, const StageConfig& cfg,
                          const TrainHooks& hooks = {});

/// Mean |p| of the residual patches over `secrets` (eval mode).
double mean_abs_residual(stegocore::StegoUnit& unit, const std::vector<std::string>& secrets);

/// Stacks images into a [K,C,H,W] float tensor.
torch::Tensor stack_images(const std::vector<stegocore::ImageTensor>& images);

/// Up to four leading secrets, used as the checkpoint's fixed eval batch.
std::vector<std::string> default_eval_batch(const std::vector<std::string>& secrets);

}  // namespace semstego::training
