#include "semstego/stegocore/tiny_transformer.hpp"

#include <cmath>

#include "semstego/common/errors.hpp"

namespace semstego::stegocore {

namespace F = torch::nn::functional;

void TinyTransformerConfig::validate() const {
  if (vocab_size <= 0 || d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ff <= 0 || max_positions <= 0) {
    throw PreconditionError("transformer sizes must be positive");
  }
  if (d_model % n_heads != 0) throw PreconditionError("d_model must be a multiple of n_heads");
  if (lora.rank <= 0) throw PreconditionError("LoRA rank must be positive");
  if (lora.dropout < 0.0 || lora.dropout >= 1.0) throw PreconditionError("LoRA dropout must be in [0,1)");
}

void to_json(nlohmann::json& j, const LoraConfig& c) {
  j = {{"rank", c.rank}, {"alpha", c.alpha}, {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, LoraConfig& c) {
  c.rank = j.value("rank", c.rank);
  c.alpha = j.value("alpha", c.alpha);
  c.dropout = j.value("dropout", c.dropout);
}

void to_json(nlohmann::json& j, const TinyTransformerConfig& c) {
  j = {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},   {"n_layers", c.n_layers},
       {"n_heads", c.n_heads},       {"d_ff", c.d_ff},         {"max_positions", c.max_positions},
       {"lora", c.lora}};
}

void from_json(const nlohmann::json& j, TinyTransformerConfig& c) {
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_positions = j.value("max_positions", c.max_positions);
  if (j.contains("lora")) c.lora = j.at("lora").get<LoraConfig>();
}

LoraLinearImpl::LoraLinearImpl(std::int64_t in, std::int64_t out, const LoraConfig& lora)
    : scaling_(lora.scaling()) {
  base_ = register_module("base", torch::nn::Linear(in, out));
  lora_a_ = register_parameter("lora_A", torch::empty({lora.rank, in}));
  lora_b_ = register_parameter("lora_B", torch::zeros({out, lora.rank}));
  torch::nn::init::kaiming_uniform_(lora_a_, std::sqrt(5.0));
  dropout_ = register_module("dropout", torch::nn::Dropout(lora.dropout));
}

torch::Tensor LoraLinearImpl::forward(const torch::Tensor& x) {
  auto update = torch::matmul(torch::matmul(dropout_(x), lora_a_.t()), lora_b_.t());
  return base_(x) + scaling_ * update;
}

TransformerBlockImpl::TransformerBlockImpl(const TinyTransformerConfig& cfg) : n_heads_(cfg.n_heads) {
  const auto d = cfg.d_model;
  ln_attn_ = register_module("ln_attn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  q_proj_ = register_module("q_proj", LoraLinear(d, d, cfg.lora));
  k_proj_ = register_module("k_proj", LoraLinear(d, d, cfg.lora));
  v_proj_ = register_module("v_proj", torch::nn::Linear(d, d));
  o_proj_ = register_module("o_proj", torch::nn::Linear(d, d));
  ln_mlp_ = register_module("ln_mlp", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
  fc_in_ = register_module("fc_in", torch::nn::Linear(d, cfg.d_ff));
  fc_out_ = register_module("fc_out", torch::nn::Linear(cfg.d_ff, d));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x) {
  const auto B = x.size(0);
  const auto T = x.size(1);
  const auto d = x.size(2);
  const auto hd = d / n_heads_;
  auto h = ln_attn_(x);
  auto split = [&](const torch::Tensor& t) { return t.view({B, T, n_heads_, hd}).transpose(1, 2); };
  auto q = split(q_proj_(h));
  auto k = split(k_proj_(h));
  auto v = split(v_proj_(h));
  auto attn = at::scaled_dot_product_attention(q, k, v, /*attn_mask=*/{}, /*dropout_p=*/0.0, /*is_causal=*/true);
  auto out = x + o_proj_(attn.transpose(1, 2).reshape({B, T, d}));
  return out + fc_out_(F::gelu(fc_in_(ln_mlp_(out))));
}

TinyTransformerImpl::TinyTransformerImpl(const TinyTransformerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  tok_emb_ = register_module("tok_emb", torch::nn::Embedding(cfg.vocab_size, cfg.d_model));
  pos_emb_ = register_module("pos_emb", torch::nn::Embedding(cfg.max_positions, cfg.d_model));
  torch::nn::init::normal_(tok_emb_->weight, 0.0, 0.02);
  torch::nn::init::normal_(pos_emb_->weight, 0.0, 0.02);
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < cfg.n_layers; ++i) blocks_->push_back(TransformerBlock(cfg));
  ln_final_ = register_module("ln_final", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.d_model})));
  head_ = register_module("head", torch::nn::Linear(torch::nn::LinearOptions(cfg.d_model, cfg.vocab_size).bias(false)));
}

torch::Tensor TinyTransformerImpl::embed(const torch::Tensor& ids) { return tok_emb_(ids); }

torch::Tensor TinyTransformerImpl::hidden(const torch::Tensor& embeddings) {
  const auto T = embeddings.size(1);
  if (T > cfg_.max_positions) {
    throw PreconditionError("sequence of " + std::to_string(T) + " positions exceeds max_positions " +
                            std::to_string(cfg_.max_positions));
  }
  auto x = embeddings + pos_emb_->weight.slice(0, 0, T).unsqueeze(0);
  for (const auto& block : *blocks_) x = block->as<TransformerBlock>()->forward(x);
  return ln_final_(x);
}

torch::Tensor TinyTransformerImpl::logits(const torch::Tensor& hidden) { return head_(hidden); }

TinyLanguageModel::TinyLanguageModel(const TinyTransformerConfig& cfg, std::uint64_t seed) {
  torch::manual_seed(seed);
  net_ = TinyTransformer(cfg);
  for (auto& [name, p] : parameter_groups().frozen) p.set_requires_grad(false);
}

torch::Tensor TinyLanguageModel::input_embedding_lookup(const torch::Tensor& ids) { return net_->embed(ids); }

torch::Tensor TinyLanguageModel::forward_hidden_states(const torch::Tensor& embeddings) {
  if (embeddings.dim() != 3 || embeddings.size(2) != embedding_width()) {
    throw PreconditionError("forward_hidden_states expects [B,T,d_emb] input");
  }
  return net_->hidden(embeddings);
}

torch::Tensor TinyLanguageModel::lm_logits(const torch::Tensor& hidden) { return net_->logits(hidden); }

ParameterGroups TinyLanguageModel::parameter_groups() {
  ParameterGroups g;
  for (const auto& item : net_->named_parameters()) {
    const auto& name = item.key();
    const bool lora = name.ends_with(".lora_A") || name.ends_with(".lora_B");
    if (lora) {
      g.lora_adapters.emplace_back(name, item.value());
    } else if (name == "tok_emb.weight") {
      g.token_embeddings.emplace_back(name, item.value());
    } else if (name == "head.weight") {
      g.lm_head.emplace_back(name, item.value());
    } else {
      g.frozen.emplace_back(name, item.value());
    }
  }
  return g;
}

}  // namespace semstego::stegocore
