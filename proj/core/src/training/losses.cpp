#include "semstego/training/losses.hpp"

#include <string>

#include "semstego/common/errors.hpp"

namespace semstego::training {

torch::Tensor loss_text(const torch::Tensor& logits, const torch::Tensor& targets) {
  if (logits.dim() != 2 || targets.dim() != 1) throw PreconditionError("loss_text expects [S,V] logits and [S] targets");
  if (logits.size(0) != targets.size(0)) {
    throw PreconditionError("loss_text: " + std::to_string(logits.size(0)) + " logit rows for " +
                            std::to_string(targets.size(0)) + " targets");
  }
  if (logits.size(0) == 0) throw PreconditionError("loss_text: no supervised positions");
  return torch::nn::functional::cross_entropy(logits, targets.to(torch::kInt64));
}

torch::Tensor loss_emb(const torch::Tensor& patches) { return patches.abs().mean(); }

namespace {
void check_stage(int stage) {
  if (stage != 1 && stage != 2) throw PreconditionError("stage must be 1 or 2");
}
}  // namespace

double total_loss(int stage, double l_txt, double l_emb, double lambda_text, double lambda_emb) {
  check_stage(stage);
  return stage == 1 ? lambda_text * l_txt + lambda_emb * l_emb : lambda_text * l_txt;
}

torch::Tensor total_loss(int stage, const torch::Tensor& l_txt, const torch::Tensor& l_emb, double lambda_text,
                         double lambda_emb) {
  check_stage(stage);
  if (stage == 2) return lambda_text * l_txt;
  return lambda_text * l_txt + lambda_emb * l_emb;
}

}  // namespace semstego::training
