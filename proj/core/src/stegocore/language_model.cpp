#include "semstego/stegocore/language_model.hpp"

#include "semstego/common/errors.hpp"

namespace semstego::stegocore {

NamedTensors ParameterGroups::trainable() const {
  NamedTensors out = lora_adapters;
  out.insert(out.end(), token_embeddings.begin(), token_embeddings.end());
  out.insert(out.end(), lm_head.begin(), lm_head.end());
  return out;
}

NamedTensors ParameterGroups::all() const {
  NamedTensors out = trainable();
  out.insert(out.end(), frozen.begin(), frozen.end());
  return out;
}

std::vector<TokenId> LanguageModel::greedy_generate(const torch::Tensor& prefix_embeddings, std::int64_t max_len,
                                                    TokenId stop_id) {
  torch::NoGradGuard no_grad;
  auto x = prefix_embeddings.dim() == 2 ? prefix_embeddings.unsqueeze(0) : prefix_embeddings;
  if (x.dim() != 3 || x.size(0) != 1) throw PreconditionError("greedy_generate expects a single prefix");
  std::vector<TokenId> out;
  const auto budget = std::min(max_len, max_positions() - x.size(1));
  for (std::int64_t step = 0; step < budget; ++step) {
    auto h = forward_hidden_states(x);
    auto logits = lm_logits(h.select(1, h.size(1) - 1));
    const auto next = logits.argmax(-1).item<std::int64_t>();
    out.push_back(next);
    if (next == stop_id) break;
    auto emb = input_embedding_lookup(torch::tensor({next}, torch::kInt64).unsqueeze(0));
    x = torch::cat({x, emb.to(x.dtype())}, 1);
  }
  return out;
}

}  // namespace semstego::stegocore
