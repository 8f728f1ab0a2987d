#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace semstego::textproto {

using TokenId = std::int64_t;

/// Byte-level BPE tokenizer with a fixed base vocabulary size.
///
/// Ids 0..255 are raw bytes, ids 256.. are learned merges in rank order.
/// Ids between the last merge and `base_vocab_size()` are reserved and
/// decode to nothing. Special tokens are appended after the base range and
/// always encode atomically from their surface form.
///
/// Pre-tokenization splits text into pieces of the form `␣?word` and bare
/// whitespace runs; merges never cross a piece boundary, so
/// `decode(encode(s)) == s` for every byte string `s`.
class ByteBpeTokenizer {
 public:
  static constexpr TokenId kByteTokens = 256;

  explicit ByteBpeTokenizer(TokenId base_vocab_size = 8000);

  /// Learns merges from `corpus` until the base range is full or no pair
  /// occurs at least `min_frequency` times. Ties break on the smaller pair.
  static ByteBpeTokenizer train(std::span<const std::string> corpus, TokenId base_vocab_size,
                                std::int64_t min_frequency = 1);

  [[nodiscard]] std::vector<TokenId> encode(std::string_view text) const;
  [[nodiscard]] std::string decode(std::span<const TokenId> ids) const;

  [[nodiscard]] TokenId base_vocab_size() const { return base_vocab_size_; }
  /// Base range plus registered special tokens.
  [[nodiscard]] TokenId vocab_size() const {
    return base_vocab_size_ + static_cast<TokenId>(specials_.size());
  }
  [[nodiscard]] std::size_t merge_count() const { return merges_.size(); }

  /// Registers `surface` as an atomic token. Returns its id and whether it
  /// was already present (in which case the existing id is reused).
  std::pair<TokenId, bool> add_special_token(std::string_view surface);
  [[nodiscard]] std::optional<TokenId> special_id(std::string_view surface) const;
  [[nodiscard]] bool is_special(TokenId id) const;
  [[nodiscard]] const std::vector<std::string>& special_surfaces() const { return specials_; }

  [[nodiscard]] nlohmann::json to_json() const;
  static ByteBpeTokenizer from_json(const nlohmann::json& j);

  friend bool operator==(const ByteBpeTokenizer&, const ByteBpeTokenizer&) = default;

 private:
  void encode_piece(std::string_view piece, std::vector<TokenId>& out) const;
  void append_plain(std::string_view text, std::vector<TokenId>& out) const;
  void rebuild_tables();

  TokenId base_vocab_size_;
  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::vector<std::string> specials_;
  // Derived lookup tables; rebuilt from merges_.
  std::map<std::pair<TokenId, TokenId>, TokenId> merge_rank_;
  std::vector<std::string> token_bytes_;
};

/// Splits text into BPE pieces (see ByteBpeTokenizer).
std::vector<std::string_view> pretokenize(std::string_view text);

}  // namespace semstego::textproto
