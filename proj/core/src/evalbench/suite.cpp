#include "semstego/evalbench/suite.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include <spdlog/spdlog.h>

#include "semstego/common/errors.hpp"

namespace semstego::evalbench {

using stegocore::ImageTensor;

std::string_view to_string(Pairing p) { return p == Pairing::zip ? "zip" : "grid"; }

Pairing parse_pairing(std::string_view s) {
  if (s == "zip") return Pairing::zip;
  if (s == "grid") return Pairing::grid;
  throw PreconditionError("unknown pairing '" + std::string(s) + "' (expected zip or grid)");
}

Aggregate aggregate_records(const std::vector<PairRecord>& records) {
  Aggregate a;
  a.pairs = records.size();
  if (records.empty()) return a;
  double bert = 0.0;
  std::size_t bert_n = 0;
  for (const auto& r : records) {
    a.wer += r.wer;
    a.bleu4 += r.bleu4;
    a.rouge_l += r.rouge_l;
    a.psnr += r.psnr;
    a.ssim += r.ssim;
    if (r.parse_status != textproto::ParseStatus::ok) ++a.parse_failures;
    if (r.bert_score) {
      bert += *r.bert_score;
      ++bert_n;
    }
  }
  const auto n = static_cast<double>(records.size());
  a.wer /= n;
  a.bleu4 /= n;
  a.rouge_l /= n;
  a.psnr /= n;
  a.ssim /= n;
  if (bert_n == records.size()) a.bert_score = bert / n;
  return a;
}

MetricsReport evaluate_suite(stegocore::StegoSystem& system, const std::vector<std::string>& secrets,
                             const std::vector<ImageTensor>& covers, const EvalConfig& cfg) {
  if (secrets.empty()) throw PreconditionError("evaluation needs at least one secret");
  if (covers.empty()) throw PreconditionError("evaluation needs at least one cover");
  MetricsReport rep;
  rep.config = {{"pairing", to_string(cfg.pairing)},
                {"quantize", cfg.quantize},
                {"subset", cfg.subset},
                {"seed", cfg.seed},
                {"secrets", secrets.size()},
                {"covers", covers.size()},
                {"bert_backend", cfg.bert_backend ? cfg.bert_backend->name() : std::string()}};
  if (cfg.bert_backend == nullptr) {
    rep.notice = "BERT-Score omitted: no backend registered";
    spdlog::info("{}", rep.notice);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (cfg.pairing == Pairing::zip) {
    for (std::size_t i = 0; i < secrets.size(); ++i) pairs.emplace_back(i, i % covers.size());
  } else {
    for (std::size_t i = 0; i < secrets.size(); ++i)
      for (std::size_t j = 0; j < covers.size(); ++j) pairs.emplace_back(i, j);
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [si, ci] = pairs[k];
    const auto& cover = covers[ci];
    auto out = system.embed(secrets[si], cover);
    ImageTensor carrier = cfg.quantize ? stegocore::quantize(out.stego) : out.stego;
    const auto rec = system.decode(carrier);
    PairRecord r;
    r.index = k;
    r.secret_index = si;
    r.cover_index = ci;
    r.secret = secrets[si];
    r.recovered = rec.text;
    r.parse_status = rec.status;
    r.wer = wer(r.secret, r.recovered);
    r.bleu4 = bleu4(r.secret, r.recovered);
    r.rouge_l = rouge_l(r.secret, r.recovered);
    r.bert_score = bert_score(r.secret, r.recovered, cfg.bert_backend);
    r.psnr = psnr(cover, carrier);
    r.ssim = ssim(cover, carrier);
    if (!rec.ok()) spdlog::warn("pair {}: parse status {}", k, textproto::to_string(rec.status));
    rep.records.push_back(std::move(r));
  }
  rep.aggregate = aggregate_records(rep.records);
  return rep;
}

namespace {

nlohmann::ordered_json pair_json(const PairRecord& r) {
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["secret_index"] = r.secret_index;
  j["cover_index"] = r.cover_index;
  j["secret"] = r.secret;
  j["recovered"] = r.recovered;
  j["parse_status"] = textproto::to_string(r.parse_status);
  j["flagged"] = r.parse_status != textproto::ParseStatus::ok;
  j["wer"] = r.wer;
  j["bleu4"] = r.bleu4;
  j["rouge_l"] = r.rouge_l;
  if (r.bert_score) j["bert_score"] = *r.bert_score;
  j["psnr"] = r.psnr;
  j["ssim"] = r.ssim;
  return j;
}

nlohmann::ordered_json aggregate_json(const Aggregate& a) {
  nlohmann::ordered_json j;
  j["pairs"] = a.pairs;
  j["parse_failures"] = a.parse_failures;
  j["wer"] = a.wer;
  j["bleu4"] = a.bleu4;
  j["rouge_l"] = a.rouge_l;
  if (a.bert_score) j["bert_score"] = *a.bert_score;
  j["psnr"] = a.psnr;
  j["ssim"] = a.ssim;
  return j;
}

}  // namespace

void write_pairs_jsonl(std::ostream& out, const MetricsReport& report) {
  for (const auto& r : report.records) out << pair_json(r).dump() << '\n';
}

void write_aggregate_csv(std::ostream& out, const MetricsReport& report) {
  const auto& a = report.aggregate;
  out << "subset,pairs,parse_failures,WER,BLEU,ROUGE,BERT-S,PSNR,SSIM\n";
  char buf[256];
  std::string bert;
  if (a.bert_score) {
    std::snprintf(buf, sizeof buf, "%.6f", *a.bert_score);
    bert = buf;
  }
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%.6f,%s,%.4f,%.6f", a.pairs, a.parse_failures, a.wer,
                a.bleu4, a.rouge_l, bert.c_str(), a.psnr, a.ssim);
  out << report.config.value("subset", std::string("eval")) << ',' << buf << '\n';
}

void write_report(const std::filesystem::path& dir, const MetricsReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "pairs.jsonl", std::ios::binary);
    write_pairs_jsonl(f, report);
  }
  {
    std::ofstream f(dir / "aggregate.csv", std::ios::binary);
    write_aggregate_csv(f, report);
  }
  nlohmann::ordered_json j;
  j["config"] = report.config;
  j["aggregate"] = aggregate_json(report.aggregate);
  if (!report.notice.empty()) j["notice"] = report.notice;
  std::ofstream f(dir / "report.json", std::ios::binary);
  f << j.dump(2) << '\n';
  if (!f) throw FormatError("cannot write report under " + dir.string());
}

stegocore::EmbedOutput IdentityStubSystem::embed(std::string_view message, const ImageTensor& cover) {
  last_ = std::string(message);
  stegocore::EmbedOutput out;
  out.stego = cover;
  out.stego.set_role(stegocore::ImageRole::stego);
  out.residual = ImageTensor(cover.channels(), cover.height(), cover.width(), stegocore::ImageRole::residual);
  return out;
}

textproto::Recovery IdentityStubSystem::decode(const ImageTensor&) { return {last_, textproto::ParseStatus::ok}; }

}  // namespace semstego::evalbench
