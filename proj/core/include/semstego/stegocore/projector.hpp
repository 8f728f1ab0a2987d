#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace semstego::stegocore {

enum class Activation { gelu, identity };

struct ProjectorConfig {
  std::int64_t in_features = 0;
  std::int64_t out_features = 0;
  /// 0 selects max(in, out).
  std::int64_t hidden = 0;
  Activation activation = Activation::gelu;

  [[nodiscard]] std::int64_t hidden_width() const { return hidden > 0 ? hidden : std::max(in_features, out_features); }
};

void to_json(nlohmann::json& j, const ProjectorConfig& c);
void from_json(const nlohmann::json& j, ProjectorConfig& c);

/// Two-layer perceptron bridging token space and patch space. Used as the
/// token-to-patch map (d_emb → d_patch) and the patch-to-token map
/// (d_patch → d_emb). Accepts any leading batch dimensions.
class ProjectorImpl : public torch::nn::Module {
 public:
  explicit ProjectorImpl(const ProjectorConfig& cfg);

  /// Throws PreconditionError if the last dimension is not in_features.
  torch::Tensor forward(const torch::Tensor& x);

  void zero_output_layer();
  void zero_biases();

  [[nodiscard]] const ProjectorConfig& config() const { return cfg_; }

 private:
  ProjectorConfig cfg_;
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(Projector);

}  // namespace semstego::stegocore
