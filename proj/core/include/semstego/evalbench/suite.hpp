#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semstego/evalbench/metrics.hpp"
#include "semstego/stegocore/pipeline.hpp"

namespace semstego::evalbench {

enum class Pairing {
  /// secret i with cover i mod K
  zip,
  /// every secret with every cover
  grid,
};

struct EvalConfig {
  Pairing pairing = Pairing::zip;
  /// Round the stego image to 8 bits before decoding.
  bool quantize = false;
  /// Not owned; absent backend omits BERT-Score.
  BertScoreBackend* bert_backend = nullptr;
  std::string subset = "eval";
  std::uint64_t seed = 0;
};

struct PairRecord {
  std::size_t index = 0;
  std::size_t secret_index = 0;
  std::size_t cover_index = 0;
  std::string secret;
  std::string recovered;
  textproto::ParseStatus parse_status = textproto::ParseStatus::ok;
  double wer = 0.0;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  std::optional<double> bert_score;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct Aggregate {
  std::size_t pairs = 0;
  std::size_t parse_failures = 0;
  double wer = 0.0;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  std::optional<double> bert_score;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<PairRecord> records;
  Aggregate aggregate;
  nlohmann::json config;
  /// Set when BERT-Score was omitted.
  std::string notice;
};

/// Arithmetic means over `records`.
Aggregate aggregate_records(const std::vector<PairRecord>& records);

/// embed → optional quantize → decode → metrics for every pair. Parse
/// failures are scored against their best-effort text and counted.
MetricsReport evaluate_suite(stegocore::StegoSystem& system, const std::vector<std::string>& secrets,
                             const std::vector<stegocore::ImageTensor>& covers, const EvalConfig& cfg = {});

/// One JSON object per pair.
void write_pairs_jsonl(std::ostream& out, const MetricsReport& report);
/// Secret/Recovery columns then Cover/Stego columns; empty BERT-S when absent.
void write_aggregate_csv(std::ostream& out, const MetricsReport& report);
/// pairs.jsonl, aggregate.csv and report.json under `dir`.
void write_report(const std::filesystem::path& dir, const MetricsReport& report);

/// Leaves covers untouched and decodes the last embedded message verbatim.
class IdentityStubSystem final : public stegocore::StegoSystem {
 public:
  explicit IdentityStubSystem(stegocore::Geometry geometry) : geometry_(geometry) {}
  [[nodiscard]] stegocore::Geometry geometry() const override { return geometry_; }
  stegocore::EmbedOutput embed(std::string_view message, const stegocore::ImageTensor& cover) override;
  textproto::Recovery decode(const stegocore::ImageTensor& stego) override;

 private:
  stegocore::Geometry geometry_;
  std::string last_;
};

std::string_view to_string(Pairing p);
Pairing parse_pairing(std::string_view s);

}  // namespace semstego::evalbench
