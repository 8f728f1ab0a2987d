#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "semstego/stegocore/image.hpp"

namespace semstego::evalbench {

/// Detectors run on the 8-bit rendering round(255·x) of each channel.
/// Every score is an estimated LSB embedding rate clipped to [0,1].
double rs_estimate(const stegocore::ImageTensor& image);
double spa_estimate(const stegocore::ImageTensor& image);
/// 1 − CDF of the pair-of-values chi-square statistic over all samples.
double chi_square_lsb(const stegocore::ImageTensor& image);

struct DetectorScores {
  double rs = 0.0;
  double spa = 0.0;
  double chi_square = 0.0;
  /// Mean of the three.
  double fused = 0.0;
};

DetectorScores detector_scores(const stegocore::ImageTensor& image);

struct RocPoint {
  /// Images with fused score ≥ threshold are flagged; +inf for (0,0).
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Sweeps every distinct score in descending order. Starts at (0,0), ends at
/// (1,1); AUC by the trapezoid rule. Needs two scores per class.
RocCurve roc_curve(std::span<const double> negatives, std::span<const double> positives);

struct SteganalysisReport {
  std::vector<DetectorScores> cover_scores;
  std::vector<DetectorScores> stego_scores;
  RocCurve roc;
};

/// Covers are the negative class. Throws PreconditionError with fewer than
/// two images per class.
SteganalysisReport steganalyze(const std::vector<stegocore::ImageTensor>& covers,
                               const std::vector<stegocore::ImageTensor>& stegos);

/// Header "threshold,fpr,tpr".
void write_roc_csv(std::ostream& out, const RocCurve& roc);
void render_roc_plot(const std::filesystem::path& path, const RocCurve& roc, int size = 400);

/// 8-bit copy of `cover` with every least significant bit replaced by a
/// random bit.
stegocore::ImageTensor lsb_embed_full_rate(const stegocore::ImageTensor& cover, std::uint64_t seed);

}  // namespace semstego::evalbench
