#include "semstego/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "semstego/common/errors.hpp"
#include "semstego/training/losses.hpp"

namespace semstego::training {

using stegocore::ImageTensor;
using stegocore::NamedTensors;
using stegocore::StegoUnit;
using textproto::WrappedMessage;

void write_loss_log_header(std::ostream& out) { out << "step\tl_txt\tl_emb\tlr\n"; }

void write_loss_record(std::ostream& out, const LossRecord& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%lld\t%.9g\t%.9g\t%.9g\n", static_cast<long long>(r.step), r.l_txt, r.l_emb, r.lr);
  out << line;
}

namespace {

torch::Tensor keep_mask(std::int64_t n, const std::vector<double>& ratios, std::mt19937_64& rng) {
  std::vector<torch::Tensor> rows;
  rows.reserve(ratios.size());
  for (double r : ratios) rows.push_back(stegocore::mask_keep_vector(n, r, rng));
  return torch::stack(rows).unsqueeze(-1);
}

torch::Tensor bounded(const torch::Tensor& stego, TrainClamp clamp) {
  return clamp == TrainClamp::straight_through ? torch::clamp(stego, 0.0, 1.0) : stego;
}

/// Cycles through shuffled passes over [0, n).
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::mt19937_64& rng) : order_(n), rng_(rng) { reshuffle(); }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::mt19937_64& rng_;
  std::size_t pos_ = 0;
};

/// Restores requires_grad flags on scope exit.
class GradFlagScope {
 public:
  explicit GradFlagScope(NamedTensors tensors) : tensors_(std::move(tensors)) {
    for (const auto& [name, t] : tensors_) saved_.push_back(t.requires_grad());
  }
  ~GradFlagScope() {
    for (std::size_t i = 0; i < tensors_.size(); ++i) tensors_[i].second.set_requires_grad(saved_[i]);
  }
  GradFlagScope(const GradFlagScope&) = delete;
  GradFlagScope& operator=(const GradFlagScope&) = delete;

 private:
  NamedTensors tensors_;
  std::vector<bool> saved_;
};

std::vector<WrappedMessage> wrap_all(StegoUnit& unit, const std::vector<std::string>& secrets) {
  if (secrets.empty()) throw PreconditionError("training needs at least one secret");
  std::vector<WrappedMessage> out;
  out.reserve(secrets.size());
  for (const auto& s : secrets) out.push_back(unit.wrap(s));
  return out;
}

template <class T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

std::vector<torch::Tensor> tensors_of(const NamedTensors& named) {
  std::vector<torch::Tensor> out;
  out.reserve(named.size());
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

LossRecord record_step(std::int64_t step, const StepLosses& l, double lr) {
  const double total = l.total.item<double>();
  const double l_txt = l.l_txt.item<double>();
  const double l_emb = l.l_emb.defined() ? l.l_emb.item<double>() : 0.0;
  if (!std::isfinite(total)) {
    throw DivergenceError("non-finite loss at step " + std::to_string(step) + " (l_txt=" + std::to_string(l_txt) +
                          ", l_emb=" + std::to_string(l_emb) + ", lr=" + std::to_string(lr) + ")");
  }
  return {step, l_txt, l_emb, total, lr};
}

void set_lr(torch::optim::AdamW& opt, double lr) {
  for (auto& group : opt.param_groups()) static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
}

void emit(const LossRecord& r, const TrainHooks& hooks, std::vector<LossRecord>& log) {
  log.push_back(r);
  if (hooks.log != nullptr) write_loss_record(*hooks.log, r);
  if (hooks.on_step) hooks.on_step(r);
}

void check_lora(StegoUnit& unit, const StageConfig& cfg) {
  const auto& have = unit.config().model.lora;
  if (have.rank != cfg.lora.rank || have.alpha != cfg.lora.alpha || have.dropout != cfg.lora.dropout) {
    throw PreconditionError("stage LoRA settings differ from the unit's backbone configuration");
  }
}

}  // namespace

StepLosses stage1_losses(StegoUnit& unit, const std::vector<WrappedMessage>& batch,
                         const std::vector<double>& mask_ratios, std::mt19937_64& rng, const StageConfig& cfg,
                         const torch::Tensor* covers) {
  std::vector<textproto::EmbedInput> inputs;
  inputs.reserve(batch.size());
  for (const auto& w : batch) inputs.push_back(unit.embed_input(w));
  auto e = stegocore::extract_smes_batch(unit.model(), inputs);
  auto p = unit.t2p()->forward(e);
  auto l_emb = loss_emb(p);
  torch::Tensor carrier = p;
  if (covers != nullptr) {
    const auto& g = unit.geometry();
    auto stego = bounded(*covers + stegocore::patches_to_image(p, g), cfg.clamp);
    carrier = stegocore::image_to_patches(stego, g);
  }
  auto features = unit.p2t()->forward(carrier);
  if (!mask_ratios.empty()) {
    if (mask_ratios.size() != batch.size()) throw PreconditionError("one mask ratio per example expected");
    features = features * keep_mask(features.size(1), mask_ratios, rng).to(features.dtype());
  }
  auto tf = stegocore::decode_teacher_forced(unit.model(), unit.bundle(), features, batch);
  auto l_txt = loss_text(tf.logits, tf.targets);
  return {l_txt, l_emb, total_loss(1, l_txt, l_emb, cfg.lambda_text, cfg.lambda_emb)};
}

StepLosses stage2_losses(StegoUnit& unit, const torch::Tensor& smes, const std::vector<WrappedMessage>& batch,
                         const torch::Tensor& covers, const StageConfig& cfg) {
  const auto& g = unit.geometry();
  auto p = unit.t2p()->forward(smes);
  auto stego = bounded(covers + stegocore::patches_to_image(p, g), cfg.clamp);
  auto features = unit.p2t()->forward(stegocore::image_to_patches(stego, g));
  auto tf = stegocore::decode_teacher_forced(unit.model(), unit.bundle(), features, batch);
  auto l_txt = loss_text(tf.logits, tf.targets);
  auto l_emb = loss_emb(p).detach();
  return {l_txt, l_emb, total_loss(2, l_txt, l_emb, cfg.lambda_text, cfg.lambda_emb)};
}

NamedTensors stage_parameters(StegoUnit& unit, int stage) {
  NamedTensors out;
  auto add_module = [&](const std::string& prefix, torch::nn::Module& m) {
    for (const auto& p : m.named_parameters()) out.emplace_back(prefix + p.key(), p.value());
  };
  if (stage == 1) {
    for (auto& [name, t] : unit.model().parameter_groups().trainable()) out.emplace_back("model." + name, t);
    add_module("t2p.", *unit.t2p());
    add_module("p2t.", *unit.p2t());
  } else if (stage == 2) {
    add_module("t2p.", *unit.t2p());
  } else {
    throw PreconditionError("stage must be 1 or 2");
  }
  return out;
}

torch::Tensor stack_images(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw PreconditionError("no cover images");
  std::vector<torch::Tensor> ts;
  ts.reserve(images.size());
  for (const auto& img : images) ts.push_back(stegocore::to_tensor(img, torch::kFloat32));
  return torch::stack(ts);
}

std::vector<std::string> default_eval_batch(const std::vector<std::string>& secrets) {
  return {secrets.begin(), secrets.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, secrets.size()))};
}

TrainOutcome train_stage1(StegoUnit& unit, const std::vector<std::string>& secrets, const StageConfig& cfg,
                          const std::vector<ImageTensor>* covers, const TrainHooks& hooks) {
  cfg.validate();
  if (cfg.stage != 1) throw PreconditionError("train_stage1 needs a stage-1 config");
  check_lora(unit, cfg);
  const auto wrapped = wrap_all(unit, secrets);
  const bool joint = cfg.with_covers || covers != nullptr;
  torch::Tensor cover_bank;
  if (joint) {
    if (covers == nullptr || covers->empty()) throw PreconditionError("with_covers needs cover images");
    cover_bank = stack_images(*covers);
  }

  torch::manual_seed(cfg.seed);
  std::mt19937_64 rng(cfg.seed);
  EpochSampler sampler(wrapped.size(), rng);
  std::uniform_real_distribution<double> ratio(cfg.mask_ratio_range[0], cfg.mask_ratio_range[1]);

  auto params = stage_parameters(unit, 1);
  GradFlagScope flags(params);
  for (auto& [name, t] : params) t.set_requires_grad(true);
  torch::optim::AdamW opt(tensors_of(params),
                          torch::optim::AdamWOptions(cfg.learning_rate).weight_decay(cfg.weight_decay));

  const auto total_steps = cfg.resolve_steps(wrapped.size());
  const auto B = static_cast<std::size_t>(cfg.batch_size);
  if (hooks.log != nullptr) write_loss_log_header(*hooks.log);
  std::vector<LossRecord> log;
  log.reserve(static_cast<std::size_t>(total_steps));
  unit.set_training(true);
  for (std::int64_t step = 0; step < total_steps; ++step) {
    const double lr = cfg.learning_rate * lr_factor(cfg, step, total_steps);
    set_lr(opt, lr);
    const auto idx = sampler.next(B);
    const auto batch = pick(wrapped, idx);
    std::vector<double> ratios;
    if (cfg.mask_enabled()) {
      ratios.reserve(B);
      for (std::size_t i = 0; i < B; ++i) ratios.push_back(ratio(rng));
    }
    torch::Tensor cov;
    const torch::Tensor* cov_ptr = nullptr;
    if (joint) {
      std::uniform_int_distribution<std::int64_t> pick_cover(0, cover_bank.size(0) - 1);
      std::vector<std::int64_t> ci(B);
      for (auto& c : ci) c = pick_cover(rng);
      cov = cover_bank.index_select(0, torch::tensor(ci, torch::kInt64));
      cov_ptr = &cov;
    }
    auto losses = stage1_losses(unit, batch, ratios, rng, cfg, cov_ptr);
    opt.zero_grad();
    losses.total.backward();
    opt.step();
    emit(record_step(step, losses, lr), hooks, log);
  }
  unit.set_training(false);
  nlohmann::json snapshot = cfg;
  return {capture_checkpoint(unit, 1, total_steps, cfg.seed, snapshot, default_eval_batch(secrets)), std::move(log)};
}

TrainOutcome train_stage2(StegoUnit& unit, const std::vector<ImageTensor>& covers,
                          const std::vector<std::string>& secrets, const StageConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (cfg.stage != 2) throw PreconditionError("train_stage2 needs a stage-2 config");
  const auto wrapped = wrap_all(unit, secrets);
  const auto cover_bank = stack_images(covers);
  const auto& g = unit.geometry();
  if (cover_bank.size(1) != g.channels || cover_bank.size(2) != g.height || cover_bank.size(3) != g.width) {
    throw GeometryError("cover images do not match the unit geometry");
  }

  torch::manual_seed(cfg.seed);
  std::mt19937_64 rng(cfg.seed);
  EpochSampler sampler(wrapped.size(), rng);
  std::uniform_int_distribution<std::int64_t> pick_cover(0, cover_bank.size(0) - 1);

  auto all = unit.named_tensors();
  GradFlagScope flags(all);
  for (auto& [name, t] : all) t.set_requires_grad(false);
  auto params = stage_parameters(unit, 2);
  for (auto& [name, t] : params) t.set_requires_grad(true);
  torch::optim::AdamW opt(tensors_of(params),
                          torch::optim::AdamWOptions(cfg.learning_rate).weight_decay(cfg.weight_decay));

  unit.set_training(false);
  unit.t2p()->train(true);
  // The backbone is frozen and deterministic here, so SMEs are fixed per secret.
  torch::Tensor smes;
  {
    torch::NoGradGuard no_grad;
    std::vector<textproto::EmbedInput> inputs;
    inputs.reserve(wrapped.size());
    for (const auto& w : wrapped) inputs.push_back(unit.embed_input(w));
    smes = stegocore::extract_smes_batch(unit.model(), inputs);
  }

  const auto total_steps = cfg.resolve_steps(wrapped.size());
  const auto B = static_cast<std::size_t>(cfg.batch_size);
  if (hooks.log != nullptr) write_loss_log_header(*hooks.log);
  std::vector<LossRecord> log;
  log.reserve(static_cast<std::size_t>(total_steps));
  for (std::int64_t step = 0; step < total_steps; ++step) {
    const double lr = cfg.learning_rate * lr_factor(cfg, step, total_steps);
    set_lr(opt, lr);
    const auto idx = sampler.next(B);
    std::vector<std::int64_t> si(idx.begin(), idx.end());
    std::vector<std::int64_t> ci(B);
    for (auto& c : ci) c = pick_cover(rng);
    auto losses = stage2_losses(unit, smes.index_select(0, torch::tensor(si, torch::kInt64)), pick(wrapped, idx),
                                cover_bank.index_select(0, torch::tensor(ci, torch::kInt64)), cfg);
    opt.zero_grad();
    losses.total.backward();
    opt.step();
    emit(record_step(step, losses, lr), hooks, log);
  }
  unit.set_training(false);
  nlohmann::json snapshot = cfg;
  return {capture_checkpoint(unit, 2, total_steps, cfg.seed, snapshot, default_eval_batch(secrets)), std::move(log)};
}

double mean_abs_residual(StegoUnit& unit, const std::vector<std::string>& secrets) {
  torch::NoGradGuard no_grad;
  unit.set_training(false);
  std::vector<textproto::EmbedInput> inputs;
  for (const auto& s : secrets) inputs.push_back(unit.embed_input(unit.wrap(s)));
  auto p = unit.t2p()->forward(stegocore::extract_smes_batch(unit.model(), inputs));
  return p.abs().mean().item<double>();
}

}  // namespace semstego::training
