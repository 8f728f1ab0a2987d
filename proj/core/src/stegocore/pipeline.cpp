#include "semstego/stegocore/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace semstego::stegocore {

using textproto::EmbedInput;
using textproto::PromptBundle;
using textproto::WrappedMessage;

// ---- tensor bridges ------------------------------------------------------

torch::Tensor to_tensor(const ImageTensor& image, torch::ScalarType dtype) {
  auto t = torch::from_blob(const_cast<double*>(image.values().data()),
                            {image.channels(), image.height(), image.width()}, torch::kFloat64);
  return t.to(dtype).clone();
}

ImageTensor image_from_tensor(const torch::Tensor& chw, ImageRole role) {
  if (chw.dim() != 3) throw GeometryError("expected a [C,H,W] tensor");
  auto t = chw.detach().to(torch::kFloat64).contiguous();
  std::vector<double> values(t.data_ptr<double>(), t.data_ptr<double>() + t.numel());
  return ImageTensor(t.size(0), t.size(1), t.size(2), std::move(values), role);
}

torch::Tensor to_tensor(const PatchGrid& grid, torch::ScalarType dtype) {
  auto t = torch::from_blob(const_cast<double*>(grid.values.data()),
                            {grid.geometry.num_patches(), grid.geometry.patch_dim()}, torch::kFloat64);
  return t.to(dtype).clone();
}

PatchGrid patches_from_tensor(const torch::Tensor& rows, const Geometry& geometry) {
  geometry.validate();
  if (rows.dim() != 2 || rows.size(0) != geometry.num_patches() || rows.size(1) != geometry.patch_dim()) {
    throw GeometryError("patch tensor shape does not match geometry");
  }
  auto t = rows.detach().to(torch::kFloat64).contiguous();
  return {geometry, std::vector<double>(t.data_ptr<double>(), t.data_ptr<double>() + t.numel())};
}

torch::Tensor patches_to_image(const torch::Tensor& patches, const Geometry& g) {
  g.validate();
  if (patches.dim() < 2 || patches.size(-2) != g.num_patches() || patches.size(-1) != g.patch_dim()) {
    throw GeometryError("patch tensor shape does not match geometry");
  }
  const auto lead = patches.dim() - 2;
  std::vector<std::int64_t> shape(patches.sizes().begin(), patches.sizes().begin() + lead);
  auto split = shape;
  split.insert(split.end(), {g.grid_rows(), g.grid_cols(), g.channels, g.patch, g.patch});
  std::vector<std::int64_t> order(static_cast<std::size_t>(lead));
  std::iota(order.begin(), order.end(), 0);
  order.insert(order.end(), {lead + 2, lead + 0, lead + 3, lead + 1, lead + 4});
  auto out = shape;
  out.insert(out.end(), {g.channels, g.height, g.width});
  return patches.reshape(split).permute(order).reshape(out);
}

torch::Tensor image_to_patches(const torch::Tensor& image, const Geometry& g) {
  g.validate();
  if (image.dim() < 3 || image.size(-3) != g.channels || image.size(-2) != g.height || image.size(-1) != g.width) {
    throw GeometryError("image tensor shape does not match geometry");
  }
  const auto lead = image.dim() - 3;
  std::vector<std::int64_t> shape(image.sizes().begin(), image.sizes().begin() + lead);
  auto split = shape;
  split.insert(split.end(), {g.channels, g.grid_rows(), g.patch, g.grid_cols(), g.patch});
  std::vector<std::int64_t> order(static_cast<std::size_t>(lead));
  std::iota(order.begin(), order.end(), 0);
  order.insert(order.end(), {lead + 1, lead + 3, lead + 0, lead + 2, lead + 4});
  auto out = shape;
  out.insert(out.end(), {g.num_patches(), g.patch_dim()});
  return image.reshape(split).permute(order).reshape(out);
}

// ---- mask strategy -------------------------------------------------------

std::vector<std::int64_t> sample_masked_rows(std::int64_t n_rows, double ratio, std::mt19937_64& rng) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw PreconditionError("mask ratio must lie in [0,1]");
  if (n_rows < 0) throw PreconditionError("row count must be non-negative");
  const auto k = static_cast<std::int64_t>(std::llround(ratio * static_cast<double>(n_rows)));
  std::vector<std::int64_t> rows(static_cast<std::size_t>(n_rows));
  std::iota(rows.begin(), rows.end(), 0);
  // Partial Fisher-Yates with an explicit draw so the stream is portable.
  for (std::int64_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::int64_t> pick(i, n_rows - 1);
    std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(rng))]);
  }
  rows.resize(static_cast<std::size_t>(k));
  std::sort(rows.begin(), rows.end());
  return rows;
}

torch::Tensor mask_keep_vector(std::int64_t n_rows, double ratio, std::mt19937_64& rng) {
  auto keep = torch::ones({n_rows});
  for (auto r : sample_masked_rows(n_rows, ratio, rng)) keep[r] = 0.0;
  return keep;
}

torch::Tensor apply_mask(const torch::Tensor& rows, double ratio, std::mt19937_64& rng) {
  if (rows.dim() != 2) throw PreconditionError("apply_mask expects an N×d matrix");
  auto keep = mask_keep_vector(rows.size(0), ratio, rng).to(rows.dtype());
  return rows * keep.unsqueeze(1);
}

// ---- model-side ops -------------------------------------------------------

namespace {

torch::Tensor ids_tensor(std::span<const TokenId> ids) {
  return torch::tensor(std::vector<std::int64_t>(ids.begin(), ids.end()), torch::kInt64);
}

/// Decode prompt embeddings with the placeholder run replaced: [B,Lp,d].
torch::Tensor decode_prefix(LanguageModel& model, const PromptBundle& bundle, const torch::Tensor& features) {
  const auto B = features.size(0);
  const auto n = static_cast<std::int64_t>(bundle.stego_count);
  if (features.dim() != 3 || features.size(1) != n || features.size(2) != model.embedding_width()) {
    throw GeometryError("decode features must be [B,N,d_emb] with N matching the prompt's placeholder run");
  }
  auto prompt = model.input_embedding_lookup(ids_tensor(bundle.decode_prompt_ids).unsqueeze(0)).expand({B, -1, -1});
  const auto begin = static_cast<std::int64_t>(bundle.stego_begin);
  return torch::cat({prompt.slice(1, 0, begin), features.to(prompt.dtype()), prompt.slice(1, begin + n)}, 1);
}

class EvalModeGuard {
 public:
  explicit EvalModeGuard(StegoUnit& unit)
      : unit_(unit), was_training_(unit.model().net()->is_training() || unit.t2p()->is_training()) {
    unit_.set_training(false);
  }
  ~EvalModeGuard() { unit_.set_training(was_training_); }
  EvalModeGuard(const EvalModeGuard&) = delete;
  EvalModeGuard& operator=(const EvalModeGuard&) = delete;

 private:
  StegoUnit& unit_;
  bool was_training_;
};

}  // namespace

torch::Tensor extract_smes(LanguageModel& model, std::span<const TokenId> embed_input,
                           std::span<const std::size_t> positions) {
  for (auto p : positions) {
    if (p >= embed_input.size()) throw PreconditionError("SME position " + std::to_string(p) + " out of range");
  }
  auto h = model.forward_hidden_states(model.input_embedding_lookup(ids_tensor(embed_input).unsqueeze(0)));
  std::vector<std::int64_t> idx(positions.begin(), positions.end());
  return h.squeeze(0).index_select(0, torch::tensor(idx, torch::kInt64));
}

torch::Tensor extract_smes_batch(LanguageModel& model, const std::vector<EmbedInput>& inputs) {
  if (inputs.empty()) throw PreconditionError("empty SME batch");
  const auto n = inputs.front().sme_count;
  std::size_t T = 0;
  for (const auto& in : inputs) {
    if (in.sme_count != n) throw PreconditionError("SME run lengths differ within a batch");
    T = std::max(T, in.ids.size());
  }
  const auto B = static_cast<std::int64_t>(inputs.size());
  auto ids = torch::zeros({B, static_cast<std::int64_t>(T)}, torch::kInt64);
  auto idx = torch::empty({B, static_cast<std::int64_t>(n)}, torch::kInt64);
  auto ids_a = ids.accessor<std::int64_t, 2>();
  auto idx_a = idx.accessor<std::int64_t, 2>();
  for (std::int64_t b = 0; b < B; ++b) {
    const auto& in = inputs[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < in.ids.size(); ++t) ids_a[b][static_cast<std::int64_t>(t)] = in.ids[t];
    for (std::size_t i = 0; i < n; ++i) idx_a[b][static_cast<std::int64_t>(i)] = static_cast<std::int64_t>(in.sme_begin + i);
  }
  auto h = model.forward_hidden_states(model.input_embedding_lookup(ids));
  return h.gather(1, idx.unsqueeze(-1).expand({B, static_cast<std::int64_t>(n), h.size(2)}));
}

TeacherForced decode_teacher_forced(LanguageModel& model, const PromptBundle& bundle, const torch::Tensor& features,
                                    const std::vector<WrappedMessage>& targets) {
  const auto B = features.size(0);
  if (static_cast<std::size_t>(B) != targets.size()) throw PreconditionError("feature/target batch sizes differ");
  std::size_t Tm = 0;
  for (const auto& w : targets) Tm = std::max(Tm, w.token_ids.size());
  const auto tm = static_cast<std::int64_t>(Tm);

  auto tgt = torch::zeros({B, tm}, torch::kInt64);
  auto valid = torch::zeros({B, tm}, torch::kBool);
  auto tgt_a = tgt.accessor<std::int64_t, 2>();
  auto valid_a = valid.accessor<bool, 2>();
  for (std::int64_t b = 0; b < B; ++b) {
    const auto& ids = targets[static_cast<std::size_t>(b)].token_ids;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      tgt_a[b][static_cast<std::int64_t>(t)] = ids[t];
      valid_a[b][static_cast<std::int64_t>(t)] = true;
    }
  }

  auto prefix = decode_prefix(model, bundle, features);
  const auto lp = prefix.size(1);
  // The last target token is never an input.
  auto x = torch::cat({prefix, model.input_embedding_lookup(tgt.slice(1, 0, tm - 1))}, 1);
  auto h = model.forward_hidden_states(x).slice(1, lp - 1, lp - 1 + tm);
  auto flat_valid = valid.reshape({-1});
  auto rows = h.reshape({B * tm, h.size(2)}).index({flat_valid});
  return {model.lm_logits(rows), tgt.reshape({-1}).index({flat_valid})};
}

std::vector<TokenId> generate_from_features(LanguageModel& model, const PromptBundle& bundle,
                                            const torch::Tensor& features, std::int64_t max_len) {
  torch::NoGradGuard no_grad;
  auto f = features.dim() == 2 ? features.unsqueeze(0) : features;
  return model.greedy_generate(decode_prefix(model, bundle, f), max_len, bundle.specials.secret_end);
}

// ---- the model unit -------------------------------------------------------

void to_json(nlohmann::json& j, const Geometry& g) {
  j = {{"channels", g.channels}, {"height", g.height}, {"width", g.width}, {"patch", g.patch}};
}

void from_json(const nlohmann::json& j, Geometry& g) {
  g.channels = j.value("channels", g.channels);
  g.height = j.value("height", g.height);
  g.width = j.value("width", g.width);
  g.patch = j.value("patch", g.patch);
}

void to_json(nlohmann::json& j, const UnitConfig& c) {
  j = {{"geometry", c.geometry},
       {"model", c.model},
       {"projector_hidden", c.projector_hidden},
       {"projector_activation", c.projector_activation == Activation::gelu ? "gelu" : "identity"},
       {"max_decode_len", c.max_decode_len},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, UnitConfig& c) {
  if (j.contains("geometry")) c.geometry = j.at("geometry").get<Geometry>();
  if (j.contains("model")) c.model = j.at("model").get<TinyTransformerConfig>();
  c.projector_hidden = j.value("projector_hidden", c.projector_hidden);
  c.projector_activation =
      j.value("projector_activation", std::string("gelu")) == "identity" ? Activation::identity : Activation::gelu;
  c.max_decode_len = j.value("max_decode_len", c.max_decode_len);
  c.seed = j.value("seed", c.seed);
}

StegoUnit::StegoUnit(textproto::ByteBpeTokenizer tokenizer, textproto::PromptTemplates templates, UnitConfig config)
    : tokenizer_(std::move(tokenizer)), templates_(std::move(templates)), config_(std::move(config)) {
  config_.geometry.validate();
  specials_ = textproto::special_tokens_of(tokenizer_);
  config_.model.vocab_size = tokenizer_.vocab_size();
  bundle_ = textproto::make_prompt_bundle(tokenizer_, specials_, templates_,
                                          static_cast<std::size_t>(config_.geometry.num_patches()));
  model_ = std::make_shared<TinyLanguageModel>(config_.model, config_.seed);
  const auto d_emb = config_.model.d_model;
  const auto d_patch = config_.geometry.patch_dim();
  t2p_ = Projector(ProjectorConfig{d_emb, d_patch, config_.projector_hidden, config_.projector_activation});
  p2t_ = Projector(ProjectorConfig{d_patch, d_emb, config_.projector_hidden, config_.projector_activation});
}

WrappedMessage StegoUnit::wrap(std::string_view message) const {
  return textproto::wrap_message(tokenizer_, specials_, message);
}

EmbedInput StegoUnit::embed_input(const WrappedMessage& wrapped) const {
  return textproto::build_embed_input(wrapped, bundle_, static_cast<std::size_t>(config_.geometry.num_patches()));
}

void StegoUnit::set_training(bool training) {
  model_->set_training(training);
  t2p_->train(training);
  p2t_->train(training);
}

NamedTensors StegoUnit::named_tensors() {
  NamedTensors out;
  auto add = [&](const std::string& prefix, torch::nn::Module& m) {
    for (const auto& p : m.named_parameters()) out.emplace_back(prefix + p.key(), p.value());
    for (const auto& b : m.named_buffers()) out.emplace_back(prefix + b.key(), b.value());
  };
  add("model.", *model_->net());
  add("t2p.", *t2p_);
  add("p2t.", *p2t_);
  return out;
}

torch::Tensor unit_smes(StegoUnit& unit, std::string_view message) {
  const auto in = unit.embed_input(unit.wrap(message));
  const auto pos = in.sme_positions();
  return extract_smes(unit.model(), in.ids, pos);
}

EmbedOutput embed_message(StegoUnit& unit, std::string_view message, const ImageTensor& cover, ClampPolicy clamp) {
  const auto& g = unit.geometry();
  if (cover.channels() != g.channels || cover.height() != g.height || cover.width() != g.width) {
    throw GeometryError("cover is " + std::to_string(cover.channels()) + "x" + std::to_string(cover.height()) + "x" +
                        std::to_string(cover.width()) + ", unit expects " + std::to_string(g.channels) + "x" +
                        std::to_string(g.height) + "x" + std::to_string(g.width));
  }
  torch::NoGradGuard no_grad;
  EvalModeGuard eval(unit);
  auto p = unit.t2p()->forward(unit_smes(unit, message));
  auto residual = reshape_to_image(patches_from_tensor(p, g));
  auto stego = insert(cover, residual, clamp);
  return {std::move(stego), std::move(residual)};
}

textproto::Recovery decode_patches(StegoUnit& unit, const torch::Tensor& patches, std::int64_t max_len) {
  torch::NoGradGuard no_grad;
  EvalModeGuard eval(unit);
  auto features = unit.p2t()->forward(patches.to(torch::kFloat32));
  auto ids = generate_from_features(unit.model(), unit.bundle(), features, max_len);
  return textproto::extract_recovered(unit.tokenizer(), unit.specials(), ids);
}

textproto::Recovery decode_message(StegoUnit& unit, const ImageTensor& stego, std::int64_t max_len) {
  const auto& g = unit.geometry();
  if (stego.channels() != g.channels || stego.height() != g.height || stego.width() != g.width) {
    throw GeometryError("stego image shape does not match the unit geometry");
  }
  return decode_patches(unit, image_to_patches(to_tensor(stego, torch::kFloat32), g), max_len);
}

EmbedOutput UnitStegoSystem::embed(std::string_view message, const ImageTensor& cover) {
  return embed_message(unit_, message, cover, clamp_);
}

textproto::Recovery UnitStegoSystem::decode(const ImageTensor& stego) {
  return decode_message(unit_, stego, unit_.max_decode_len());
}

std::unique_ptr<StegoUnit> make_tiny_unit(const std::vector<std::string>& corpus, const Geometry& geometry,
                                          std::uint64_t seed, const TinyTransformerConfig& model,
                                          const textproto::PromptTemplates& templates) {
  auto tok = textproto::train_protocol_tokenizer(corpus, templates);
  UnitConfig cfg;
  cfg.geometry = geometry;
  cfg.model = model;
  cfg.seed = seed;
  cfg.max_decode_len = textproto::decode_budget(tok, textproto::special_tokens_of(tok), corpus);
  return std::make_unique<StegoUnit>(std::move(tok), templates, cfg);
}

void enable_determinism() {
  torch::set_num_threads(1);
  at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/true);
}

}  // namespace semstego::stegocore
