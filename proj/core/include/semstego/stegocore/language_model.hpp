#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "semstego/textproto/tokenizer.hpp"

namespace semstego::stegocore {

using textproto::TokenId;
using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

/// Parameters of a backbone split by how the two training stages treat them.
struct ParameterGroups {
  NamedTensors lora_adapters;
  NamedTensors token_embeddings;
  NamedTensors lm_head;
  /// Everything else; never trained.
  NamedTensors frozen;

  [[nodiscard]] NamedTensors trainable() const;
  [[nodiscard]] NamedTensors all() const;
};

/// What the pipeline needs from a causal language model.
///
/// Inputs are batched: ids are [B,T] int64, embeddings and hidden states are
/// [B,T,d_emb]. `forward_hidden_states` returns the final layer (after the
/// closing normalisation), one vector per input position.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  [[nodiscard]] virtual std::int64_t embedding_width() const = 0;
  [[nodiscard]] virtual std::int64_t vocab_size() const = 0;
  [[nodiscard]] virtual std::int64_t max_positions() const = 0;

  virtual torch::Tensor input_embedding_lookup(const torch::Tensor& ids) = 0;
  virtual torch::Tensor forward_hidden_states(const torch::Tensor& embeddings) = 0;
  virtual torch::Tensor lm_logits(const torch::Tensor& hidden) = 0;

  /// Greedy decoding from a [T,d] (or [1,T,d]) prefix of input embeddings.
  /// Stops after `stop_id` or `max_len` new tokens. Deterministic for fixed
  /// weights; runs without autograd.
  virtual std::vector<TokenId> greedy_generate(const torch::Tensor& prefix_embeddings, std::int64_t max_len,
                                               TokenId stop_id);

  virtual ParameterGroups parameter_groups() = 0;
  virtual void set_training(bool training) = 0;
  /// Whether concurrent inference calls are allowed.
  [[nodiscard]] virtual bool read_safe() const { return false; }
};

}  // namespace semstego::stegocore
