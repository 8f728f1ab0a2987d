#include "semstego/textproto/tokenizer.hpp"

#include <algorithm>
#include <set>

#include "semstego/common/errors.hpp"

namespace semstego::textproto {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

using Pair = std::pair<TokenId, TokenId>;

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      std::size_t j = i;
      while (j < n && is_space(text[j])) ++j;
      // A trailing ' ' before a word belongs to that word.
      if (j < n && text[j - 1] == ' ') {
        if (j - 1 > i) pieces.push_back(text.substr(i, j - 1 - i));
        std::size_t k = j;
        while (k < n && !is_space(text[k])) ++k;
        pieces.push_back(text.substr(j - 1, k - j + 1));
        i = k;
      } else {
        pieces.push_back(text.substr(i, j - i));
        i = j;
      }
    } else {
      std::size_t k = i;
      while (k < n && !is_space(text[k])) ++k;
      pieces.push_back(text.substr(i, k - i));
      i = k;
    }
  }
  return pieces;
}

ByteBpeTokenizer::ByteBpeTokenizer(TokenId base_vocab_size) : base_vocab_size_(base_vocab_size) {
  if (base_vocab_size < kByteTokens) {
    throw PreconditionError("base vocabulary must hold at least the 256 byte tokens");
  }
  rebuild_tables();
}

void ByteBpeTokenizer::rebuild_tables() {
  merge_rank_.clear();
  token_bytes_.assign(static_cast<std::size_t>(kByteTokens + static_cast<TokenId>(merges_.size())), {});
  for (TokenId b = 0; b < kByteTokens; ++b) {
    token_bytes_[static_cast<std::size_t>(b)] = std::string(1, static_cast<char>(b));
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto id = kByteTokens + static_cast<TokenId>(r);
    merge_rank_.emplace(merges_[r], id);
    token_bytes_[static_cast<std::size_t>(id)] =
        token_bytes_[static_cast<std::size_t>(merges_[r].first)] +
        token_bytes_[static_cast<std::size_t>(merges_[r].second)];
  }
}

ByteBpeTokenizer ByteBpeTokenizer::train(std::span<const std::string> corpus, TokenId base_vocab_size,
                                         std::int64_t min_frequency) {
  ByteBpeTokenizer tok(base_vocab_size);
  const auto budget = static_cast<std::size_t>(base_vocab_size - kByteTokens);

  std::map<std::string, std::int64_t> piece_counts;
  for (const auto& text : corpus) {
    for (auto piece : pretokenize(text)) ++piece_counts[std::string(piece)];
  }

  struct Word {
    std::vector<TokenId> symbols;
    std::int64_t count;
  };
  std::vector<Word> words;
  words.reserve(piece_counts.size());
  for (const auto& [piece, count] : piece_counts) {
    Word w{{}, count};
    for (unsigned char c : piece) w.symbols.push_back(c);
    words.push_back(std::move(w));
  }

  std::map<Pair, std::int64_t> counts;
  std::map<Pair, std::set<std::size_t>> where;
  // Ordered by (-count, pair) so begin() is the best candidate.
  std::set<std::pair<std::int64_t, Pair>> ranked;

  auto adjust = [&](const Pair& p, std::int64_t delta, std::size_t word) {
    auto& c = counts[p];
    if (c > 0) ranked.erase({-c, p});
    c += delta;
    if (c > 0) {
      ranked.insert({-c, p});
    } else {
      counts.erase(p);
    }
    if (delta > 0) where[p].insert(word);
  };
  auto add_word = [&](std::size_t idx, std::int64_t sign) {
    const auto& s = words[idx].symbols;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) adjust({s[i], s[i + 1]}, sign * words[idx].count, idx);
  };
  for (std::size_t i = 0; i < words.size(); ++i) add_word(i, +1);

  while (tok.merges_.size() < budget && !ranked.empty()) {
    const auto [neg, best] = *ranked.begin();
    if (-neg < min_frequency) break;
    const auto new_id = kByteTokens + static_cast<TokenId>(tok.merges_.size());
    tok.merges_.push_back(best);

    const auto affected = where[best];
    for (auto idx : affected) {
      add_word(idx, -1);
      auto& s = words[idx].symbols;
      std::vector<TokenId> merged;
      merged.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
          merged.push_back(new_id);
          ++i;
        } else {
          merged.push_back(s[i]);
        }
      }
      s = std::move(merged);
      add_word(idx, +1);
    }
    where.erase(best);
  }

  tok.rebuild_tables();
  return tok;
}

void ByteBpeTokenizer::encode_piece(std::string_view piece, std::vector<TokenId>& out) const {
  std::vector<TokenId> s;
  s.reserve(piece.size());
  for (unsigned char c : piece) s.push_back(c);
  while (s.size() > 1) {
    TokenId best = -1;
    std::size_t best_at = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      auto it = merge_rank_.find({s[i], s[i + 1]});
      if (it != merge_rank_.end() && (best < 0 || it->second < best)) {
        best = it->second;
        best_at = i;
      }
    }
    if (best < 0) break;
    const auto pair = merges_[static_cast<std::size_t>(best - kByteTokens)];
    std::vector<TokenId> merged;
    merged.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i >= best_at && i + 1 < s.size() && s[i] == pair.first && s[i + 1] == pair.second) {
        merged.push_back(best);
        ++i;
      } else {
        merged.push_back(s[i]);
      }
    }
    s = std::move(merged);
  }
  out.insert(out.end(), s.begin(), s.end());
}

void ByteBpeTokenizer::append_plain(std::string_view text, std::vector<TokenId>& out) const {
  for (auto piece : pretokenize(text)) encode_piece(piece, out);
}

std::vector<TokenId> ByteBpeTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    // Earliest special surface; longest wins on a tie.
    std::size_t hit = std::string_view::npos;
    std::size_t hit_len = 0;
    TokenId hit_id = -1;
    for (std::size_t s = 0; s < specials_.size(); ++s) {
      const auto at = text.find(specials_[s], pos);
      if (at == std::string_view::npos) continue;
      if (at < hit || (at == hit && specials_[s].size() > hit_len)) {
        hit = at;
        hit_len = specials_[s].size();
        hit_id = base_vocab_size_ + static_cast<TokenId>(s);
      }
    }
    if (hit == std::string_view::npos) {
      append_plain(text.substr(pos), out);
      break;
    }
    append_plain(text.substr(pos, hit - pos), out);
    out.push_back(hit_id);
    pos = hit + hit_len;
  }
  return out;
}

std::string ByteBpeTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (auto id : ids) {
    if (id < 0 || id >= vocab_size()) {
      throw PreconditionError("token id " + std::to_string(id) + " outside vocabulary");
    }
    if (id >= base_vocab_size_) {
      out += specials_[static_cast<std::size_t>(id - base_vocab_size_)];
    } else if (static_cast<std::size_t>(id) < token_bytes_.size()) {
      out += token_bytes_[static_cast<std::size_t>(id)];
    }
  }
  return out;
}

std::pair<TokenId, bool> ByteBpeTokenizer::add_special_token(std::string_view surface) {
  if (surface.empty()) throw PreconditionError("special token surface must be nonempty");
  if (auto existing = special_id(surface)) return {*existing, true};
  specials_.emplace_back(surface);
  return {base_vocab_size_ + static_cast<TokenId>(specials_.size() - 1), false};
}

std::optional<TokenId> ByteBpeTokenizer::special_id(std::string_view surface) const {
  auto it = std::find(specials_.begin(), specials_.end(), surface);
  if (it == specials_.end()) return std::nullopt;
  return base_vocab_size_ + static_cast<TokenId>(it - specials_.begin());
}

bool ByteBpeTokenizer::is_special(TokenId id) const { return id >= base_vocab_size_ && id < vocab_size(); }

nlohmann::json ByteBpeTokenizer::to_json() const {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [a, b] : merges_) merges.push_back({a, b});
  return {{"type", "byte_bpe"}, {"base_vocab_size", base_vocab_size_}, {"merges", merges}, {"specials", specials_}};
}

ByteBpeTokenizer ByteBpeTokenizer::from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "byte_bpe") throw FormatError("tokenizer: unsupported type");
  ByteBpeTokenizer tok(j.at("base_vocab_size").get<TokenId>());
  for (const auto& m : j.at("merges")) {
    const auto a = m.at(0).get<TokenId>();
    const auto b = m.at(1).get<TokenId>();
    const auto next = kByteTokens + static_cast<TokenId>(tok.merges_.size());
    if (a < 0 || b < 0 || a >= next || b >= next) throw FormatError("tokenizer: merge refers to unknown id");
    tok.merges_.emplace_back(a, b);
  }
  if (kByteTokens + static_cast<TokenId>(tok.merges_.size()) > tok.base_vocab_size_) {
    throw FormatError("tokenizer: more merges than the base vocabulary holds");
  }
  tok.specials_ = j.at("specials").get<std::vector<std::string>>();
  tok.rebuild_tables();
  return tok;
}

}  // namespace semstego::textproto
