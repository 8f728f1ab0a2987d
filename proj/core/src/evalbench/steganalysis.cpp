#include "semstego/evalbench/steganalysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "semstego/common/errors.hpp"

namespace semstego::evalbench {

using stegocore::ImageTensor;

namespace {

struct Plane {
  std::int64_t h = 0, w = 0;
  std::vector<int> px;
  [[nodiscard]] int at(std::int64_t y, std::int64_t x) const { return px[static_cast<std::size_t>(y * w + x)]; }
};

std::vector<Plane> to_planes(const ImageTensor& img) {
  std::vector<Plane> planes;
  for (std::int64_t c = 0; c < img.channels(); ++c) {
    Plane p{img.height(), img.width(), {}};
    p.px.reserve(static_cast<std::size_t>(p.h * p.w));
    for (std::int64_t y = 0; y < p.h; ++y)
      for (std::int64_t x = 0; x < p.w; ++x)
        p.px.push_back(static_cast<int>(std::lround(std::clamp(img.at(c, y, x), 0.0, 1.0) * 255.0)));
    planes.push_back(std::move(p));
  }
  return planes;
}

double clip01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

/// Root of a·x² + b·x + c = 0 with the smallest magnitude; NaN if none.
double small_root(double a, double b, double c) {
  if (std::abs(a) < 1e-12) return std::abs(b) < 1e-12 ? std::numeric_limits<double>::quiet_NaN() : -c / b;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -b / (2.0 * a);
  const double s = std::sqrt(disc);
  const double r1 = (-b + s) / (2.0 * a);
  const double r2 = (-b - s) / (2.0 * a);
  return std::abs(r1) < std::abs(r2) ? r1 : r2;
}

int flip_pos(int v) { return v ^ 1; }
int flip_neg(int v) { return ((v + 1) ^ 1) - 1; }

struct RsCounts {
  double r = 0, s = 0;
};

double smoothness(const std::array<int, 4>& g) {
  double f = 0;
  for (int i = 0; i < 3; ++i) f += std::abs(g[static_cast<std::size_t>(i + 1)] - g[static_cast<std::size_t>(i)]);
  return f;
}

/// Regular and singular group fractions under mask [0,1,1,0].
RsCounts rs_counts(const Plane& p, bool negative, bool pre_flip) {
  constexpr std::array<int, 4> mask{0, 1, 1, 0};
  RsCounts out;
  double groups = 0;
  for (std::int64_t y = 0; y < p.h; ++y)
    for (std::int64_t x = 0; x + 4 <= p.w; x += 4) {
      std::array<int, 4> g{};
      for (int i = 0; i < 4; ++i) {
        int v = p.at(y, x + i);
        if (pre_flip) v = flip_pos(v);
        g[static_cast<std::size_t>(i)] = v;
      }
      auto f = g;
      for (std::size_t i = 0; i < 4; ++i)
        if (mask[i] != 0) f[i] = negative ? flip_neg(f[i]) : flip_pos(f[i]);
      const double before = smoothness(g);
      const double after = smoothness(f);
      if (after > before) out.r += 1;
      if (after < before) out.s += 1;
      groups += 1;
    }
  if (groups > 0) {
    out.r /= groups;
    out.s /= groups;
  }
  return out;
}

double rs_plane(const Plane& p) {
  const auto m0 = rs_counts(p, false, false);
  const auto n0 = rs_counts(p, true, false);
  const auto m1 = rs_counts(p, false, true);
  const auto n1 = rs_counts(p, true, true);
  const double d0 = m0.r - m0.s;
  const double d1 = m1.r - m1.s;
  const double e0 = n0.r - n0.s;
  const double e1 = n1.r - n1.s;
  const double a = 2.0 * (d1 + d0);
  const double b = e0 - e1 - d1 - 3.0 * d0;
  const double c = d0 - e0;
  const double x = small_root(a, b, c);
  if (!std::isfinite(x)) return 0.0;
  return clip01(x / (x - 0.5));
}

double spa_plane(const Plane& p) {
  double x = 0, y = 0, k = 0, total = 0;
  for (std::int64_t r = 0; r < p.h; ++r)
    for (std::int64_t c = 0; c + 1 < p.w; ++c) {
      const int u = p.at(r, c);
      const int v = p.at(r, c + 1);
      if ((v % 2 == 0 && u < v) || (v % 2 == 1 && u > v)) x += 1;
      if ((v % 2 == 0 && u > v) || (v % 2 == 1 && u < v)) y += 1;
      if (u / 2 == v / 2) k += 1;
      total += 1;
    }
  if (k == 0) return 0.0;
  const double a = 2.0 * k;
  const double b = 2.0 * (2.0 * x - total);
  const double c = y - x;
  return clip01(small_root(a, b, c));
}

template <typename F>
double mean_over_planes(const ImageTensor& img, F&& f) {
  const auto planes = to_planes(img);
  if (planes.empty()) throw PreconditionError("steganalysis needs a nonempty image");
  double s = 0;
  for (const auto& p : planes) s += f(p);
  return s / static_cast<double>(planes.size());
}

}  // namespace

double rs_estimate(const ImageTensor& image) { return mean_over_planes(image, rs_plane); }
double spa_estimate(const ImageTensor& image) { return mean_over_planes(image, spa_plane); }

double chi_square_lsb(const ImageTensor& image) {
  std::array<double, 256> hist{};
  for (const auto& p : to_planes(image))
    for (int v : p.px) hist[static_cast<std::size_t>(v)] += 1;
  double chi = 0;
  int categories = 0;
  for (std::size_t k = 0; k < 128; ++k) {
    const double e = (hist[2 * k] + hist[2 * k + 1]) / 2.0;
    if (e < 5.0) continue;
    const double d = hist[2 * k] - e;
    chi += d * d / e;
    ++categories;
  }
  if (categories < 2) return 0.0;
  boost::math::chi_squared_distribution<double> dist(categories - 1);
  return clip01(1.0 - boost::math::cdf(dist, chi));
}

DetectorScores detector_scores(const ImageTensor& image) {
  DetectorScores s;
  s.rs = rs_estimate(image);
  s.spa = spa_estimate(image);
  s.chi_square = chi_square_lsb(image);
  s.fused = (s.rs + s.spa + s.chi_square) / 3.0;
  return s;
}

RocCurve roc_curve(std::span<const double> negatives, std::span<const double> positives) {
  if (negatives.size() < 2 || positives.size() < 2) {
    throw PreconditionError("ROC needs at least two scores per class");
  }
  std::vector<double> thresholds(negatives.begin(), negatives.end());
  thresholds.insert(thresholds.end(), positives.begin(), positives.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  const auto nn = static_cast<double>(negatives.size());
  const auto np = static_cast<double>(positives.size());
  for (double t : thresholds) {
    const auto fp = std::count_if(negatives.begin(), negatives.end(), [t](double v) { return v >= t; });
    const auto tp = std::count_if(positives.begin(), positives.end(), [t](double v) { return v >= t; });
    roc.points.push_back({t, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return roc;
}

SteganalysisReport steganalyze(const std::vector<ImageTensor>& covers, const std::vector<ImageTensor>& stegos) {
  if (covers.size() < 2 || stegos.size() < 2) {
    throw PreconditionError("steganalysis needs at least two cover and two stego images");
  }
  SteganalysisReport rep;
  std::vector<double> neg, pos;
  for (const auto& im : covers) {
    rep.cover_scores.push_back(detector_scores(im));
    neg.push_back(rep.cover_scores.back().fused);
  }
  for (const auto& im : stegos) {
    rep.stego_scores.push_back(detector_scores(im));
    pos.push_back(rep.stego_scores.back().fused);
  }
  rep.roc = roc_curve(neg, pos);
  return rep;
}

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
  out << "threshold,fpr,tpr\n";
  char buf[96];
  for (const auto& p : roc.points) {
    if (std::isinf(p.threshold)) {
      std::snprintf(buf, sizeof buf, "inf,%.9g,%.9g\n", p.fpr, p.tpr);
    } else {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.threshold, p.fpr, p.tpr);
    }
    out << buf;
  }
}

void render_roc_plot(const std::filesystem::path& path, const RocCurve& roc, int size) {
  if (size < 64) throw PreconditionError("plot size must be at least 64 pixels");
  cv::Mat img(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
  const int m = size / 10;
  const int span = size - 2 * m;
  auto to_px = [&](double fpr, double tpr) {
    return cv::Point(m + static_cast<int>(std::lround(fpr * span)), size - m - static_cast<int>(std::lround(tpr * span)));
  };
  cv::rectangle(img, to_px(0, 0), to_px(1, 1), cv::Scalar(0, 0, 0), 1);
  cv::line(img, to_px(0, 0), to_px(1, 1), cv::Scalar(180, 180, 180), 1);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    cv::line(img, to_px(roc.points[i - 1].fpr, roc.points[i - 1].tpr), to_px(roc.points[i].fpr, roc.points[i].tpr),
             cv::Scalar(200, 60, 20), 2, cv::LINE_AA);
  }
  char label[48];
  std::snprintf(label, sizeof label, "AUC %.3f", roc.auc);
  cv::putText(img, label, cv::Point(m + 8, m + 20), cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1);
  if (!cv::imwrite(path.string(), img)) throw FormatError("cannot write ROC plot to " + path.string());
}

ImageTensor lsb_embed_full_rate(const ImageTensor& cover, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ImageTensor out = cover;
  out.set_role(stegocore::ImageRole::stego);
  for (auto& v : out.values()) {
    auto q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    q = (q & ~1) | static_cast<int>(rng() & 1U);
    v = static_cast<double>(q) / 255.0;
  }
  return out;
}

}  // namespace semstego::evalbench
