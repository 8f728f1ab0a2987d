#pragma once

#include <torch/torch.h>

namespace semstego::training {

/// Mean cross-entropy over supervised positions. `logits` is [S,V],
/// `targets` is [S] int64.
torch::Tensor loss_text(const torch::Tensor& logits, const torch::Tensor& targets);

/// Mean absolute value of every entry of the patch grid.
torch::Tensor loss_emb(const torch::Tensor& patches);

/// Stage 1: lambda_text·l_txt + lambda_emb·l_emb. Stage 2: lambda_text·l_txt.
double total_loss(int stage, double l_txt, double l_emb, double lambda_text, double lambda_emb);
torch::Tensor total_loss(int stage, const torch::Tensor& l_txt, const torch::Tensor& l_emb, double lambda_text,
                         double lambda_emb);

}  // namespace semstego::training
