#include "semstego/evalbench/capacity.hpp"

#include <cstdio>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "semstego/common/errors.hpp"
#include "semstego/data/covers.hpp"
#include "semstego/training/trainer.hpp"

namespace semstego::evalbench {

std::string compression_ratio(std::int64_t tokens, std::int64_t n_patches) {
  if (tokens <= 0 || n_patches <= 0) throw PreconditionError("compression ratio needs positive counts");
  const auto g = std::gcd(tokens, n_patches);
  return std::to_string(tokens / g) + ":" + std::to_string(n_patches / g);
}

std::vector<CapacityRow> capacity_sweep(std::span<const std::int64_t> token_lengths,
                                        const stegocore::Geometry& geometry, const CapacityHooks& hooks) {
  geometry.validate();
  std::vector<CapacityRow> rows;
  for (const auto tokens : token_lengths) {
    CapacityRow row;
    row.tokens = tokens;
    row.n_patches = geometry.num_patches();
    row.ratio = compression_ratio(tokens, row.n_patches);
    if (hooks.train_and_evaluate) {
      spdlog::info("capacity sweep: {} tokens over {} patches ({})", tokens, row.n_patches, row.ratio);
      const auto point = hooks.train_and_evaluate(tokens, geometry);
      row.metrics = point.metrics;
      row.mean_secret_tokens = point.mean_secret_tokens;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_capacity_csv(std::ostream& out, const std::vector<CapacityRow>& rows) {
  out << "secret_tokens,compression_ratio,WER,BLEU,ROUGE,BERT-S,PSNR,SSIM\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    if (m.pairs == 0) {
      out << r.tokens << ',' << r.ratio << ",,,,,,\n";
      continue;
    }
    std::string bert;
    if (m.bert_score) {
      std::snprintf(buf, sizeof buf, "%.6f", *m.bert_score);
      bert = buf;
    }
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%s,%.4f,%.6f", m.wer, m.bleu4, m.rouge_l, bert.c_str(), m.psnr,
                  m.ssim);
    out << r.tokens << ',' << r.ratio << ',' << buf << '\n';
  }
}

std::vector<std::string> cut_secrets(const textproto::ByteBpeTokenizer& tokenizer,
                                     const std::vector<std::string>& pool, std::size_t n, std::int64_t tokens) {
  std::vector<std::string> words;
  for (const auto& t : pool)
    for (auto& w : split_words(t)) words.push_back(std::move(w));
  if (words.empty()) throw PreconditionError("secret pool has no words");
  if (tokens <= 0) throw PreconditionError("secret token budget must be positive");
  std::vector<std::string> out;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    for (std::size_t used = 0; used < words.size(); ++used) {
      const auto& w = words[cursor % words.size()];
      std::string next = text.empty() ? w : text + " " + w;
      if (static_cast<std::int64_t>(tokenizer.encode(next).size()) > tokens) break;
      text = std::move(next);
      ++cursor;
    }
    if (text.empty()) throw PreconditionError("token budget is smaller than a single pool word");
    out.push_back(std::move(text));
  }
  return out;
}

CapacityHooks desk_capacity_hooks(DeskSweepOptions options) {
  CapacityHooks hooks;
  hooks.train_and_evaluate = [opt = std::move(options)](std::int64_t tokens, const stegocore::Geometry& geometry) {
    const auto templates = textproto::PromptTemplates::builtin();
    auto tok = textproto::train_protocol_tokenizer(opt.pool, templates);
    const auto secrets = cut_secrets(tok, opt.pool, opt.n_secrets, tokens);
    double mean_tokens = 0.0;
    for (const auto& s : secrets) mean_tokens += static_cast<double>(tok.encode(s).size());
    mean_tokens /= static_cast<double>(secrets.size());
    stegocore::UnitConfig cfg;
    cfg.geometry = geometry;
    cfg.model = opt.model;
    cfg.seed = opt.seed;
    cfg.max_decode_len = textproto::decode_budget(tok, textproto::special_tokens_of(tok), secrets);
    stegocore::StegoUnit unit(std::move(tok), templates, cfg);
    auto s1 = opt.stage1;
    s1.seed = opt.seed;
    training::train_stage1(unit, secrets, s1);
    const auto covers = data::synthetic_covers(opt.n_covers, geometry.channels, geometry.height, geometry.width,
                                               opt.seed + 1);
    auto s2 = opt.stage2;
    s2.seed = opt.seed;
    training::train_stage2(unit, covers, secrets, s2);
    stegocore::UnitStegoSystem system(unit);
    EvalConfig ec;
    ec.pairing = Pairing::grid;
    ec.seed = opt.seed;
    ec.subset = std::to_string(tokens) + "-token";
    return CapacityPoint{evaluate_suite(system, secrets, covers, ec).aggregate, mean_tokens};
  };
  return hooks;
}

}  // namespace semstego::evalbench
