#include "semstego/stegocore/projector.hpp"

#include "semstego/common/errors.hpp"

namespace semstego::stegocore {

void to_json(nlohmann::json& j, const ProjectorConfig& c) {
  j = {{"in_features", c.in_features},
       {"out_features", c.out_features},
       {"hidden", c.hidden},
       {"activation", c.activation == Activation::gelu ? "gelu" : "identity"}};
}

void from_json(const nlohmann::json& j, ProjectorConfig& c) {
  c.in_features = j.value("in_features", c.in_features);
  c.out_features = j.value("out_features", c.out_features);
  c.hidden = j.value("hidden", c.hidden);
  const auto act = j.value("activation", std::string("gelu"));
  if (act == "gelu") {
    c.activation = Activation::gelu;
  } else if (act == "identity") {
    c.activation = Activation::identity;
  } else {
    throw FormatError("unknown projector activation '" + act + "'");
  }
}

ProjectorImpl::ProjectorImpl(const ProjectorConfig& cfg) : cfg_(cfg) {
  if (cfg.in_features <= 0 || cfg.out_features <= 0) throw PreconditionError("projector widths must be positive");
  fc1_ = register_module("fc1", torch::nn::Linear(cfg.in_features, cfg.hidden_width()));
  fc2_ = register_module("fc2", torch::nn::Linear(cfg.hidden_width(), cfg.out_features));
}

torch::Tensor ProjectorImpl::forward(const torch::Tensor& x) {
  if (x.dim() < 1 || x.size(-1) != cfg_.in_features) {
    throw PreconditionError("projector expects last dimension " + std::to_string(cfg_.in_features) + ", got " +
                            (x.dim() < 1 ? std::string("a scalar") : std::to_string(x.size(-1))));
  }
  auto h = fc1_(x);
  if (cfg_.activation == Activation::gelu) h = torch::gelu(h);
  return fc2_(h);
}

void ProjectorImpl::zero_output_layer() {
  torch::NoGradGuard no_grad;
  fc2_->weight.zero_();
  fc2_->bias.zero_();
}

void ProjectorImpl::zero_biases() {
  torch::NoGradGuard no_grad;
  fc1_->bias.zero_();
  fc2_->bias.zero_();
}

}  // namespace semstego::stegocore
