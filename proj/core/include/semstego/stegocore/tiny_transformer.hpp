#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "semstego/stegocore/language_model.hpp"

namespace semstego::stegocore {

struct LoraConfig {
  std::int64_t rank = 8;
  double alpha = 32.0;
  double dropout = 0.1;

  [[nodiscard]] double scaling() const { return alpha / static_cast<double>(rank); }
};

struct TinyTransformerConfig {
  std::int64_t vocab_size = 8004;
  std::int64_t d_model = 128;
  std::int64_t n_layers = 2;
  std::int64_t n_heads = 4;
  std::int64_t d_ff = 512;
  std::int64_t max_positions = 512;
  LoraConfig lora;

  void validate() const;
};

void to_json(nlohmann::json& j, const LoraConfig& c);
void from_json(const nlohmann::json& j, LoraConfig& c);
void to_json(nlohmann::json& j, const TinyTransformerConfig& c);
void from_json(const nlohmann::json& j, TinyTransformerConfig& c);

/// Linear layer with a frozen base and a trainable low-rank update
/// y = W x + b + (alpha/r)·B·A·dropout(x). B starts at zero.
class LoraLinearImpl : public torch::nn::Module {
 public:
  LoraLinearImpl(std::int64_t in, std::int64_t out, const LoraConfig& lora);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear base_{nullptr};
  torch::Tensor lora_a_;
  torch::Tensor lora_b_;
  torch::nn::Dropout dropout_{nullptr};
  double scaling_;
};
TORCH_MODULE(LoraLinear);

/// Pre-norm causal self-attention block; LoRA on the query and key projections.
class TransformerBlockImpl : public torch::nn::Module {
 public:
  TransformerBlockImpl(const TinyTransformerConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  std::int64_t n_heads_;
  torch::nn::LayerNorm ln_attn_{nullptr};
  LoraLinear q_proj_{nullptr};
  LoraLinear k_proj_{nullptr};
  torch::nn::Linear v_proj_{nullptr};
  torch::nn::Linear o_proj_{nullptr};
  torch::nn::LayerNorm ln_mlp_{nullptr};
  torch::nn::Linear fc_in_{nullptr};
  torch::nn::Linear fc_out_{nullptr};
};
TORCH_MODULE(TransformerBlock);

class TinyTransformerImpl : public torch::nn::Module {
 public:
  explicit TinyTransformerImpl(const TinyTransformerConfig& cfg);

  torch::Tensor embed(const torch::Tensor& ids);
  torch::Tensor hidden(const torch::Tensor& embeddings);
  torch::Tensor logits(const torch::Tensor& hidden);

  [[nodiscard]] const TinyTransformerConfig& config() const { return cfg_; }

 private:
  TinyTransformerConfig cfg_;
  torch::nn::Embedding tok_emb_{nullptr};
  torch::nn::Embedding pos_emb_{nullptr};
  torch::nn::ModuleList blocks_{nullptr};
  torch::nn::LayerNorm ln_final_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(TinyTransformer);

/// Built-in small decoder-only backbone implementing LanguageModel. Base
/// weights come from a seeded initialisation and are never updated; only the
/// LoRA adapters, token embeddings and output head train.
class TinyLanguageModel final : public LanguageModel {
 public:
  /// Seeds torch's generator with `seed` before initialising weights.
  TinyLanguageModel(const TinyTransformerConfig& cfg, std::uint64_t seed);

  [[nodiscard]] std::int64_t embedding_width() const override { return net_->config().d_model; }
  [[nodiscard]] std::int64_t vocab_size() const override { return net_->config().vocab_size; }
  [[nodiscard]] std::int64_t max_positions() const override { return net_->config().max_positions; }

  torch::Tensor input_embedding_lookup(const torch::Tensor& ids) override;
  torch::Tensor forward_hidden_states(const torch::Tensor& embeddings) override;
  torch::Tensor lm_logits(const torch::Tensor& hidden) override;

  ParameterGroups parameter_groups() override;
  void set_training(bool training) override { net_->train(training); }

  [[nodiscard]] const TinyTransformerConfig& config() const { return net_->config(); }
  TinyTransformer& net() { return net_; }

 private:
  TinyTransformer net_{nullptr};
};

}  // namespace semstego::stegocore
