#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "semstego/stegocore/image.hpp"
#include "semstego/stegocore/language_model.hpp"
#include "semstego/stegocore/projector.hpp"
#include "semstego/stegocore/tiny_transformer.hpp"
#include "semstego/textproto/protocol.hpp"

namespace semstego::stegocore {

// ---- tensor bridges ------------------------------------------------------

torch::Tensor to_tensor(const ImageTensor& image, torch::ScalarType dtype = torch::kFloat32);
ImageTensor image_from_tensor(const torch::Tensor& chw, ImageRole role);
torch::Tensor to_tensor(const PatchGrid& grid, torch::ScalarType dtype = torch::kFloat32);
PatchGrid patches_from_tensor(const torch::Tensor& rows, const Geometry& geometry);

/// Differentiable counterparts of reshape_to_image / patchify with the same
/// layout, over any leading batch dimensions: [...,N,d_patch] <-> [...,C,H,W].
torch::Tensor patches_to_image(const torch::Tensor& patches, const Geometry& geometry);
torch::Tensor image_to_patches(const torch::Tensor& image, const Geometry& geometry);

// ---- mask strategy -------------------------------------------------------

/// Indices of exactly round(ratio·n_rows) rows drawn uniformly without
/// replacement, ascending.
std::vector<std::int64_t> sample_masked_rows(std::int64_t n_rows, double ratio, std::mt19937_64& rng);

/// [N] keep-vector (1 = kept, 0 = masked) for the rows above.
torch::Tensor mask_keep_vector(std::int64_t n_rows, double ratio, std::mt19937_64& rng);

/// Replaces round(ratio·N) uniformly chosen rows of an N×d matrix by zeros.
torch::Tensor apply_mask(const torch::Tensor& rows, double ratio, std::mt19937_64& rng);

// ---- model-side ops -------------------------------------------------------

/// Last-layer hidden states at `positions`, in order: [N,d_emb].
torch::Tensor extract_smes(LanguageModel& model, std::span<const TokenId> embed_input,
                           std::span<const std::size_t> positions);

/// Batched SME extraction over right-padded inputs: [B,N,d_emb]. Padding
/// sits after the SME run, so causal attention never sees it.
torch::Tensor extract_smes_batch(LanguageModel& model, const std::vector<textproto::EmbedInput>& inputs);

/// Logits for every supervised position of a teacher-forced decode pass and
/// the matching targets. Supervision covers the wrapped message only.
struct TeacherForced {
  torch::Tensor logits;   // [S,V]
  torch::Tensor targets;  // [S]
};

/// `features` is [B,N,d_emb]; they replace the input embeddings of the
/// stego placeholder run of the decode prompt.
TeacherForced decode_teacher_forced(LanguageModel& model, const textproto::PromptBundle& bundle,
                                    const torch::Tensor& features,
                                    const std::vector<textproto::WrappedMessage>& targets);

/// Greedy generation after decode prompt with `features` ([N,d_emb]) in the
/// placeholder run.
std::vector<TokenId> generate_from_features(LanguageModel& model, const textproto::PromptBundle& bundle,
                                            const torch::Tensor& features, std::int64_t max_len);

// ---- the model unit -------------------------------------------------------

struct UnitConfig {
  Geometry geometry;
  TinyTransformerConfig model;
  /// Hidden width of both projectors; 0 selects max(d_emb, d_patch).
  std::int64_t projector_hidden = 0;
  Activation projector_activation = Activation::gelu;
  std::int64_t max_decode_len = 32;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const UnitConfig& c);
void from_json(const nlohmann::json& j, UnitConfig& c);
void to_json(nlohmann::json& j, const Geometry& g);
void from_json(const nlohmann::json& j, Geometry& g);

/// Backbone, both projectors and the text protocol that goes with them.
/// Single-writer: training needs exclusive access; inference calls are not
/// safe to interleave unless the backbone reports read_safe().
class StegoUnit {
 public:
  /// `tokenizer` must already carry the special tokens. Initialises all
  /// weights from `config.seed`.
  StegoUnit(textproto::ByteBpeTokenizer tokenizer, textproto::PromptTemplates templates, UnitConfig config);

  [[nodiscard]] const textproto::ByteBpeTokenizer& tokenizer() const { return tokenizer_; }
  [[nodiscard]] const textproto::SpecialTokenSet& specials() const { return specials_; }
  [[nodiscard]] const textproto::PromptTemplates& templates() const { return templates_; }
  [[nodiscard]] const textproto::PromptBundle& bundle() const { return bundle_; }
  [[nodiscard]] const UnitConfig& config() const { return config_; }
  [[nodiscard]] const Geometry& geometry() const { return config_.geometry; }
  [[nodiscard]] std::int64_t max_decode_len() const { return config_.max_decode_len; }
  void set_max_decode_len(std::int64_t n) { config_.max_decode_len = n; }

  TinyLanguageModel& model() { return *model_; }
  Projector& t2p() { return t2p_; }
  Projector& p2t() { return p2t_; }

  textproto::WrappedMessage wrap(std::string_view message) const;
  textproto::EmbedInput embed_input(const textproto::WrappedMessage& wrapped) const;

  void set_training(bool training);

  /// Every tensor of the unit under a stable name ("model.*", "t2p.*",
  /// "p2t.*"), parameters and buffers alike.
  NamedTensors named_tensors();

 private:
  textproto::ByteBpeTokenizer tokenizer_;
  textproto::SpecialTokenSet specials_;
  textproto::PromptTemplates templates_;
  textproto::PromptBundle bundle_;
  UnitConfig config_;
  std::shared_ptr<TinyLanguageModel> model_;
  Projector t2p_{nullptr};
  Projector p2t_{nullptr};
};

/// Built-in tiny backbone with a tokenizer trained on `corpus` and a decode
/// budget sized to the longest corpus entry.
std::unique_ptr<StegoUnit> make_tiny_unit(const std::vector<std::string>& corpus, const Geometry& geometry,
                                          std::uint64_t seed = 0, const TinyTransformerConfig& model = {},
                                          const textproto::PromptTemplates& templates =
                                              textproto::PromptTemplates::builtin());

/// SME block for one message: [N,d_emb].
torch::Tensor unit_smes(StegoUnit& unit, std::string_view message);

struct EmbedOutput {
  ImageTensor stego;
  ImageTensor residual;
};

/// stego = insert(cover, reshape_to_image(t2p(extract_smes(...)))).
EmbedOutput embed_message(StegoUnit& unit, std::string_view message, const ImageTensor& cover, ClampPolicy clamp);

/// p2t(patchify(stego)) fills the placeholder run; greedy decode; parse.
/// Parse failures are reported in the status, never thrown.
textproto::Recovery decode_message(StegoUnit& unit, const ImageTensor& stego, std::int64_t max_len);

/// Stage-1 style decode straight from patch rows, bypassing any cover.
textproto::Recovery decode_patches(StegoUnit& unit, const torch::Tensor& patches, std::int64_t max_len);

// ---- system facade used by the evaluation harness -----------------------

class StegoSystem {
 public:
  virtual ~StegoSystem() = default;
  [[nodiscard]] virtual Geometry geometry() const = 0;
  virtual EmbedOutput embed(std::string_view message, const ImageTensor& cover) = 0;
  virtual textproto::Recovery decode(const ImageTensor& stego) = 0;
};

class UnitStegoSystem final : public StegoSystem {
 public:
  UnitStegoSystem(StegoUnit& unit, ClampPolicy clamp = ClampPolicy::hard) : unit_(unit), clamp_(clamp) {}
  [[nodiscard]] Geometry geometry() const override { return unit_.geometry(); }
  EmbedOutput embed(std::string_view message, const ImageTensor& cover) override;
  textproto::Recovery decode(const ImageTensor& stego) override;

 private:
  StegoUnit& unit_;
  ClampPolicy clamp_;
};

/// Restricts torch to one intra-op thread so runs are bit-reproducible.
void enable_determinism();

}  // namespace semstego::stegocore
