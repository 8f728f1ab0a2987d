#include "semstego/training/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "semstego/common/errors.hpp"

namespace semstego::training {

namespace {

torch::Tensor probe_value(const torch::Tensor& y, GradProbe probe) {
  if (probe == GradProbe::mean_abs) return y.abs().mean();
  return 0.5 * y.pow(2).mean();
}

}  // namespace

GradcheckResult gradcheck(const stegocore::Projector& projector, const torch::Tensor& input, double epsilon,
                          GradProbe probe, std::int64_t max_entries_per_tensor, std::uint64_t seed) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) throw PreconditionError("gradcheck epsilon must lie in [1e-6, 1e-3]");
  stegocore::Projector copy(projector->config());
  copy->to(torch::kFloat64);
  {
    torch::NoGradGuard no_grad;
    auto src = projector->parameters();
    auto dst = copy->parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i].copy_(src[i]);
  }
  copy->eval();
  const auto x = input.detach().to(torch::kFloat64);

  auto params = copy->parameters();
  for (auto& p : params) {
    p.set_requires_grad(true);
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
  probe_value(copy->forward(x), probe).backward();

  std::mt19937_64 rng(seed);
  double max_diff = 0.0;
  double max_fd = 0.0;
  GradcheckResult result;
  torch::NoGradGuard no_grad;
  for (auto& p : params) {
    auto flat = p.view({-1});
    auto grad = p.grad().view({-1});
    const auto n = flat.numel();
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (max_entries_per_tensor > 0 && n > max_entries_per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(max_entries_per_tensor));
    }
    for (auto i : idx) {
      const double orig = flat[i].item<double>();
      flat[i] = orig + epsilon;
      const double up = probe_value(copy->forward(x), probe).item<double>();
      flat[i] = orig - epsilon;
      const double down = probe_value(copy->forward(x), probe).item<double>();
      flat[i] = orig;
      const double fd = (up - down) / (2.0 * epsilon);
      max_diff = std::max(max_diff, std::abs(grad[i].item<double>() - fd));
      max_fd = std::max(max_fd, std::abs(fd));
      ++result.entries_checked;
    }
  }
  result.max_rel_error = max_fd > 0.0 ? max_diff / max_fd : max_diff;
  return result;
}

}  // namespace semstego::training
