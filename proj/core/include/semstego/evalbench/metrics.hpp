#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semstego/stegocore/image.hpp"

namespace semstego::evalbench {

std::vector<std::string> split_words(std::string_view text);

/// Word-level Levenshtein distance over the reference length. Case-sensitive.
/// Throws PreconditionError on an empty reference.
double wer(std::string_view reference, std::string_view hypothesis);

enum class BleuSmoothing {
  /// Zero-match orders get epsilon/total (epsilon = 0.1).
  epsilon,
  /// Zero-match orders get 1/(total + 1).
  add_one,
  none,
};

/// Sentence BLEU with n ≤ 4, uniform weights and brevity penalty. Orders the
/// hypothesis is too short to have are dropped and the weights renormalised.
double bleu4(std::string_view reference, std::string_view hypothesis,
             BleuSmoothing smoothing = BleuSmoothing::epsilon);

/// LCS F-measure over words (beta = 1).
double rouge_l(std::string_view reference, std::string_view hypothesis);

/// Similarity backend for BERT-Score style evaluation. Conforming backends
/// return 1.0 for identical strings.
class BertScoreBackend {
 public:
  virtual ~BertScoreBackend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual double score(std::string_view reference, std::string_view hypothesis) = 0;
};

/// Word-multiset F1; a placeholder backend for wiring and tests.
class TokenOverlapBackend final : public BertScoreBackend {
 public:
  [[nodiscard]] std::string name() const override { return "token-overlap"; }
  double score(std::string_view reference, std::string_view hypothesis) override;
};

/// Name → factory. Nothing is registered by default except the overlap
/// stub, which must be requested explicitly.
class BertScoreRegistry {
 public:
  using Factory = std::function<std::unique_ptr<BertScoreBackend>()>;
  static BertScoreRegistry& instance();
  void add(const std::string& name, Factory f);
  [[nodiscard]] std::unique_ptr<BertScoreBackend> make(const std::string& name) const;
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  BertScoreRegistry();
  std::map<std::string, Factory> factories_;
};

/// Absent when no backend is given.
std::optional<double> bert_score(std::string_view reference, std::string_view hypothesis, BertScoreBackend* backend);

inline constexpr double kPsnrCap = 100.0;

/// −10·log10(MSE) with peak 1, capped at 100 dB (also for identical images).
double psnr(const stegocore::ImageTensor& a, const stegocore::ImageTensor& b);

/// Mean SSIM over the valid region of an 11×11 Gaussian window (sigma 1.5),
/// k1 = 0.01, k2 = 0.03, peak 1; per channel, then averaged.
double ssim(const stegocore::ImageTensor& a, const stegocore::ImageTensor& b);

}  // namespace semstego::evalbench
