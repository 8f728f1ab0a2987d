#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semstego/common/errors.hpp"
#include "semstego/textproto/tokenizer.hpp"

namespace semstego::textproto {

inline constexpr std::string_view kSecretStart = "<SECRET_START>";
inline constexpr std::string_view kSecretEnd = "<SECRET_END>";
inline constexpr std::string_view kSecretEmb = "<SECRET_EMB>";
inline constexpr std::string_view kStego = "<STEGO>";

struct SpecialTokenSet {
  TokenId secret_start = -1;
  TokenId secret_end = -1;
  TokenId secret_emb = -1;
  TokenId stego = -1;

  [[nodiscard]] bool contains(TokenId id) const {
    return id == secret_start || id == secret_end || id == secret_emb || id == stego;
  }
  friend bool operator==(const SpecialTokenSet&, const SpecialTokenSet&) = default;
};

/// Extends the tokenizer with the four delimiter/placeholder tokens, in a
/// fixed order. Idempotent: tokens already present keep their ids (a warning
/// is logged).
SpecialTokenSet register_special_tokens(ByteBpeTokenizer& tokenizer);

/// Looks up the four tokens on a tokenizer that already has them.
SpecialTokenSet special_tokens_of(const ByteBpeTokenizer& tokenizer);

/// Raised when a secret cannot be wrapped (empty, or contains a delimiter).
class MessageRejected : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct WrappedMessage {
  std::vector<TokenId> token_ids;  // [secret_start, tokenize(m)..., secret_end]
  std::string source_text;
};

WrappedMessage wrap_message(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                            std::string_view message);

/// The two prompt templates. The embed template must end in
/// `{secret}{sme_run}`; the decode template must hold `{sme_run}` followed
/// later by a trailing `{secret}`. Whitespace next to a marker is dropped.
struct PromptTemplates {
  std::string version;
  std::string embed;
  std::string decode;

  static PromptTemplates builtin();
  static PromptTemplates load(const std::filesystem::path& embed_file, const std::filesystem::path& decode_file);
};

inline constexpr std::string_view kSecretMarker = "{secret}";
inline constexpr std::string_view kSmeRunMarker = "{sme_run}";

struct PromptBundle {
  SpecialTokenSet specials;
  std::vector<TokenId> embed_prompt_ids;
  /// prefix ∥ N × stego ∥ suffix
  std::vector<TokenId> decode_prompt_ids;
  std::size_t stego_begin = 0;
  std::size_t stego_count = 0;
};

PromptBundle make_prompt_bundle(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                                const PromptTemplates& templates, std::size_t n_patches);

struct EmbedInput {
  std::vector<TokenId> ids;
  std::size_t sme_begin = 0;
  std::size_t sme_count = 0;

  [[nodiscard]] std::vector<std::size_t> sme_positions() const;
};

/// embed_prompt ∥ wrapped ∥ n_sme × secret_emb
EmbedInput build_embed_input(const WrappedMessage& wrapped, const PromptBundle& bundle, std::size_t n_sme);

enum class ParseStatus { ok, no_start, no_end };

std::string_view to_string(ParseStatus status);

struct Recovery {
  std::string text;  // best-effort text when status != ok
  ParseStatus status = ParseStatus::ok;

  [[nodiscard]] bool ok() const { return status == ParseStatus::ok; }
};

/// Slices the text between the first secret_start and the first secret_end
/// after it. Never throws on malformed sequences.
///
/// no_start: `text` holds the whole sequence detokenized (special tokens
/// dropped). no_end: `text` holds everything after secret_start.
Recovery extract_recovered(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                           std::span<const TokenId> generated_ids);

std::string trim(std::string_view s);

/// BPE tokenizer trained on `corpus` plus the template text, with the four
/// special tokens registered after the base vocabulary.
ByteBpeTokenizer train_protocol_tokenizer(std::span<const std::string> corpus, const PromptTemplates& templates,
                                          TokenId base_vocab_size = 8000);

/// Greedy decode budget: ceil(1.25 × longest wrapped secret) + 2 tokens.
std::int64_t decode_budget(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                           std::span<const std::string> secrets);

}  // namespace semstego::textproto
