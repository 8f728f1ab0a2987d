#include "semstego/textproto/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

namespace semstego::textproto {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!is_space(c)) return false;
  }
  return true;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

SpecialTokenSet register_special_tokens(ByteBpeTokenizer& tokenizer) {
  auto add = [&](std::string_view surface) {
    auto [id, existed] = tokenizer.add_special_token(surface);
    if (existed) spdlog::warn("special token {} already registered as id {}; reusing it", surface, id);
    return id;
  };
  SpecialTokenSet set;
  set.secret_start = add(kSecretStart);
  set.secret_end = add(kSecretEnd);
  set.secret_emb = add(kSecretEmb);
  set.stego = add(kStego);
  return set;
}

SpecialTokenSet special_tokens_of(const ByteBpeTokenizer& tokenizer) {
  auto need = [&](std::string_view surface) {
    auto id = tokenizer.special_id(surface);
    if (!id) throw PreconditionError("tokenizer lacks special token " + std::string(surface));
    return *id;
  };
  return {need(kSecretStart), need(kSecretEnd), need(kSecretEmb), need(kStego)};
}

WrappedMessage wrap_message(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                            std::string_view message) {
  if (message.empty()) throw MessageRejected("secret message is empty");
  for (auto surface : {kSecretStart, kSecretEnd, kSecretEmb, kStego}) {
    if (message.find(surface) != std::string_view::npos) {
      throw MessageRejected("secret message contains reserved token " + std::string(surface));
    }
  }
  WrappedMessage w;
  w.source_text = std::string(message);
  w.token_ids.push_back(specials.secret_start);
  auto body = tokenizer.encode(message);
  for (auto id : body) {
    // Other registered specials could still surface here.
    if (tokenizer.is_special(id)) throw MessageRejected("secret message contains a special token");
  }
  w.token_ids.insert(w.token_ids.end(), body.begin(), body.end());
  w.token_ids.push_back(specials.secret_end);
  return w;
}

PromptTemplates PromptTemplates::builtin() {
  return {"v1", "Hide the following secret message inside your hidden states. {secret}{sme_run}",
          "The image features below carry a hidden message. {sme_run} Recover the secret message: {secret}"};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& embed_file,
                                      const std::filesystem::path& decode_file) {
  return {embed_file.stem().string(), read_file(embed_file), read_file(decode_file)};
}

PromptBundle make_prompt_bundle(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                                const PromptTemplates& templates, std::size_t n_patches) {
  if (n_patches == 0) throw PreconditionError("prompt bundle needs at least one patch");
  PromptBundle bundle;
  bundle.specials = specials;

  const std::string_view embed = templates.embed;
  const auto secret_at = embed.find(kSecretMarker);
  const auto run_at = embed.find(kSmeRunMarker);
  if (secret_at == std::string_view::npos || run_at == std::string_view::npos || run_at < secret_at) {
    throw FormatError("embed template needs {secret} followed by {sme_run}");
  }
  if (!is_blank(embed.substr(secret_at + kSecretMarker.size(), run_at - secret_at - kSecretMarker.size())) ||
      !is_blank(embed.substr(run_at + kSmeRunMarker.size()))) {
    throw FormatError("embed template must end with {secret}{sme_run}");
  }
  bundle.embed_prompt_ids = tokenizer.encode(trim(embed.substr(0, secret_at)));

  const std::string_view decode = templates.decode;
  const auto d_run = decode.find(kSmeRunMarker);
  const auto d_secret = decode.find(kSecretMarker);
  if (d_run == std::string_view::npos || d_secret == std::string_view::npos || d_secret < d_run) {
    throw FormatError("decode template needs {sme_run} followed by {secret}");
  }
  if (!is_blank(decode.substr(d_secret + kSecretMarker.size()))) {
    throw FormatError("decode template must end with {secret}");
  }
  const auto prefix = tokenizer.encode(trim(decode.substr(0, d_run)));
  const auto suffix = tokenizer.encode(
      trim(decode.substr(d_run + kSmeRunMarker.size(), d_secret - d_run - kSmeRunMarker.size())));

  for (const std::vector<TokenId>* ids : std::array<const std::vector<TokenId>*, 3>{&bundle.embed_prompt_ids, &prefix, &suffix}) {
    for (auto id : *ids) {
      if (tokenizer.is_special(id)) throw FormatError("prompt templates must not contain special tokens");
    }
  }

  bundle.decode_prompt_ids = prefix;
  bundle.stego_begin = prefix.size();
  bundle.stego_count = n_patches;
  bundle.decode_prompt_ids.insert(bundle.decode_prompt_ids.end(), n_patches, specials.stego);
  bundle.decode_prompt_ids.insert(bundle.decode_prompt_ids.end(), suffix.begin(), suffix.end());
  return bundle;
}

std::vector<std::size_t> EmbedInput::sme_positions() const {
  std::vector<std::size_t> pos(sme_count);
  for (std::size_t i = 0; i < sme_count; ++i) pos[i] = sme_begin + i;
  return pos;
}

EmbedInput build_embed_input(const WrappedMessage& wrapped, const PromptBundle& bundle, std::size_t n_sme) {
  if (n_sme < 1) throw PreconditionError("n_sme must be at least 1");
  EmbedInput in;
  in.ids.reserve(bundle.embed_prompt_ids.size() + wrapped.token_ids.size() + n_sme);
  in.ids = bundle.embed_prompt_ids;
  in.ids.insert(in.ids.end(), wrapped.token_ids.begin(), wrapped.token_ids.end());
  in.sme_begin = in.ids.size();
  in.sme_count = n_sme;
  in.ids.insert(in.ids.end(), n_sme, bundle.specials.secret_emb);
  return in;
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::ok:
      return "ok";
    case ParseStatus::no_start:
      return "no_start";
    case ParseStatus::no_end:
      return "no_end";
  }
  return "unknown";
}

Recovery extract_recovered(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                           std::span<const TokenId> generated_ids) {
  auto plain = [&](std::span<const TokenId> ids) {
    std::vector<TokenId> kept;
    for (auto id : ids) {
      if (id >= 0 && id < tokenizer.vocab_size() && !specials.contains(id)) kept.push_back(id);
    }
    return trim(tokenizer.decode(kept));
  };

  auto start = std::find(generated_ids.begin(), generated_ids.end(), specials.secret_start);
  if (start == generated_ids.end()) return {plain(generated_ids), ParseStatus::no_start};
  auto end = std::find(start + 1, generated_ids.end(), specials.secret_end);
  const std::span<const TokenId> body(start + 1, end);
  if (end == generated_ids.end()) return {plain(body), ParseStatus::no_end};
  return {plain(body), ParseStatus::ok};
}

ByteBpeTokenizer train_protocol_tokenizer(std::span<const std::string> corpus, const PromptTemplates& templates,
                                          TokenId base_vocab_size) {
  std::vector<std::string> text(corpus.begin(), corpus.end());
  for (const auto* t : {&templates.embed, &templates.decode}) {
    std::string plain = *t;
    for (auto marker : {kSecretMarker, kSmeRunMarker}) {
      for (auto pos = plain.find(marker); pos != std::string::npos; pos = plain.find(marker)) {
        plain.replace(pos, marker.size(), " ");
      }
    }
    text.push_back(plain);
  }
  auto tok = ByteBpeTokenizer::train(text, base_vocab_size);
  register_special_tokens(tok);
  return tok;
}

std::int64_t decode_budget(const ByteBpeTokenizer& tokenizer, const SpecialTokenSet& specials,
                           std::span<const std::string> secrets) {
  std::size_t longest = 0;
  for (const auto& s : secrets) longest = std::max(longest, wrap_message(tokenizer, specials, s).token_ids.size());
  return static_cast<std::int64_t>(std::ceil(1.25 * static_cast<double>(longest))) + 2;
}

}  // namespace semstego::textproto
