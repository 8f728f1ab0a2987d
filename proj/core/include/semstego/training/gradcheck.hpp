#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "semstego/stegocore/projector.hpp"

namespace semstego::training {

enum class GradProbe {
  /// loss_emb of the output: mean |f(x)|.
  mean_abs,
  /// 0.5 · mean f(x)².
  quadratic,
};

struct GradcheckResult {
  /// max |analytic − fd| / max |fd| over every checked entry.
  double max_rel_error = 0.0;
  std::int64_t entries_checked = 0;
};

/// Compares analytic parameter gradients of probe∘projector against central
/// finite differences. Works on a float64 copy of the projector; the
/// original is untouched. At most `max_entries_per_tensor` entries of each
/// parameter are perturbed (a seeded sample); 0 checks all of them.
/// Throws PreconditionError unless 1e-6 ≤ epsilon ≤ 1e-3.
GradcheckResult gradcheck(const stegocore::Projector& projector, const torch::Tensor& input, double epsilon,
                          GradProbe probe, std::int64_t max_entries_per_tensor = 64, std::uint64_t seed = 0);

}  // namespace semstego::training
