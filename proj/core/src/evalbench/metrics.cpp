#include "semstego/evalbench/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "semstego/common/errors.hpp"

namespace semstego::evalbench {

using stegocore::ImageTensor;

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && ws(text[i])) ++i;
    const auto start = i;
    while (i < text.size() && !ws(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

double wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(reference);
  const auto hyp = split_words(hypothesis);
  if (ref.empty()) throw PreconditionError("wer needs a nonempty reference");
  std::vector<std::size_t> row(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const auto up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (ref[i - 1] == hyp[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return static_cast<double>(row[hyp.size()]) / static_cast<double>(ref.size());
}

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& words, std::size_t n) {
  NgramCounts out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string key = words[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += words[i + k];
    }
    ++out[key];
  }
  return out;
}

}  // namespace

double bleu4(std::string_view reference, std::string_view hypothesis, BleuSmoothing smoothing) {
  const auto ref = split_words(reference);
  const auto hyp = split_words(hypothesis);
  if (hyp.empty() || ref.empty()) return 0.0;
  const std::size_t max_order = std::min<std::size_t>(4, hyp.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_order; ++n) {
    const auto h = ngrams(hyp, n);
    const auto r = ngrams(ref, n);
    std::size_t matches = 0;
    std::size_t total = 0;
    for (const auto& [g, c] : h) {
      total += c;
      auto it = r.find(g);
      if (it != r.end()) matches += std::min(c, it->second);
    }
    double p = 0.0;
    if (matches > 0) {
      p = static_cast<double>(matches) / static_cast<double>(total);
    } else if (smoothing == BleuSmoothing::epsilon) {
      p = 0.1 / static_cast<double>(total);
    } else if (smoothing == BleuSmoothing::add_one) {
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(hyp.size());
  const double rlen = static_cast<double>(ref.size());
  const double bp = c >= rlen ? 1.0 : std::exp(1.0 - rlen / c);
  return bp * std::exp(log_sum / static_cast<double>(max_order));
}

double rouge_l(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(reference);
  const auto hyp = split_words(hypothesis);
  if (ref.empty() && hyp.empty()) return 1.0;
  if (ref.empty() || hyp.empty()) return 0.0;
  std::vector<std::size_t> prev(hyp.size() + 1, 0), cur(hyp.size() + 1, 0);
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      cur[j] = ref[i - 1] == hyp[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[hyp.size()]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(hyp.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double TokenOverlapBackend::score(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(reference);
  const auto hyp = split_words(hypothesis);
  if (ref.empty() && hyp.empty()) return 1.0;
  if (ref.empty() || hyp.empty()) return 0.0;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& w : ref) ++counts[w];
  std::size_t overlap = 0;
  for (const auto& w : hyp) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(hyp.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

BertScoreRegistry::BertScoreRegistry() {
  factories_["token-overlap"] = [] { return std::make_unique<TokenOverlapBackend>(); };
}

BertScoreRegistry& BertScoreRegistry::instance() {
  static BertScoreRegistry registry;
  return registry;
}

void BertScoreRegistry::add(const std::string& name, Factory f) { factories_[name] = std::move(f); }

std::unique_ptr<BertScoreBackend> BertScoreRegistry::make(const std::string& name) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) throw PreconditionError("no BERT-Score backend named '" + name + "'");
  return it->second();
}

std::vector<std::string> BertScoreRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : factories_) out.push_back(k);
  return out;
}

std::optional<double> bert_score(std::string_view reference, std::string_view hypothesis, BertScoreBackend* backend) {
  if (backend == nullptr) return std::nullopt;
  return backend->score(reference, hypothesis);
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw GeometryError("psnr needs images of equal shape");
  const auto& x = a.values();
  const auto& y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(x.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::array<double, kWin> gaussian_taps() {
  std::array<double, kWin> g{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

/// Separable 'valid' filtering of an h×w plane.
std::vector<double> filter_valid(const std::vector<double>& src, std::int64_t h, std::int64_t w,
                                 const std::array<double, kWin>& g) {
  const auto ow = w - kWin + 1;
  const auto oh = h - kWin + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(y * w + x + k)];
      tmp[static_cast<std::size_t>(y * ow + x)] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>((y + k) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = s;
    }
  return out;
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw GeometryError("ssim needs images of equal shape");
  const auto h = a.height();
  const auto w = a.width();
  if (h < kWin || w < kWin) throw GeometryError("ssim needs images of at least 11x11 pixels");
  const auto g = gaussian_taps();
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto plane = static_cast<std::size_t>(h * w);
  double total = 0.0;
  for (std::int64_t c = 0; c < a.channels(); ++c) {
    const auto off = static_cast<std::size_t>(c) * plane;
    std::vector<double> x(a.values().begin() + static_cast<std::ptrdiff_t>(off),
                          a.values().begin() + static_cast<std::ptrdiff_t>(off + plane));
    std::vector<double> y(b.values().begin() + static_cast<std::ptrdiff_t>(off),
                          b.values().begin() + static_cast<std::ptrdiff_t>(off + plane));
    std::vector<double> xx(plane), yy(plane), xy(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g);
    const auto syy = filter_valid(yy, h, w, g);
    const auto sxy = filter_valid(xy, h, w, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(a.channels());
}

}  // namespace semstego::evalbench
