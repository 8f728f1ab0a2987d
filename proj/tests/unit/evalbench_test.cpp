#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "semstego/data/covers.hpp"
#include "semstego/evalbench/bits.hpp"
#include "semstego/evalbench/capacity.hpp"
#include "semstego/evalbench/dwtdct.hpp"
#include "semstego/evalbench/metrics.hpp"
#include "semstego/evalbench/steganalysis.hpp"
#include "semstego/evalbench/suite.hpp"

using namespace semstego;
using namespace semstego::evalbench;
using stegocore::ImageTensor;

namespace {

ImageTensor constant_image(double v, std::int64_t c = 3, std::int64_t h = 32, std::int64_t w = 32) {
  return ImageTensor(c, h, w, stegocore::ImageRole::cover, v);
}

/// 8-bit photo-like cover: smooth structure plus mild sensor noise.
ImageTensor textured_cover(std::uint64_t seed, std::int64_t size = 64) {
  auto img = data::synthetic_cover(3, size, size, seed);
  std::mt19937_64 rng(seed * 7 + 1);
  std::normal_distribution<double> noise(0.0, 2.0 / 255.0);
  for (auto& v : img.values()) v = std::round(std::clamp(v + noise(rng), 0.0, 1.0) * 255.0) / 255.0;
  return img;
}

}  // namespace

// ---- text metrics ----------------------------------------------------------------

TEST(Wer, ReferenceExamples) {
  EXPECT_DOUBLE_EQ(wer("the cat sat", "the cat sat"), 0.0);
  EXPECT_NEAR(wer("the cat sat", "the dog sat"), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(wer("a b", ""), 1.0);
  EXPECT_DOUBLE_EQ(wer("a b", "a b c d"), 1.0);
  EXPECT_NEAR(wer("a b c", "a x c"), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(wer("a", "b c d"), 3.0);
  EXPECT_DOUBLE_EQ(wer("The cat", "the cat"), 0.5);
  EXPECT_THROW(wer("", "x"), PreconditionError);
}

TEST(Bleu, IdenticalAndDisjoint) {
  EXPECT_NEAR(bleu4("the cat sat on the mat", "the cat sat on the mat"), 1.0, 1e-12);
  const std::string ten = "one two three four five six seven eight nine ten";
  EXPECT_NEAR(bleu4(ten, ten), 1.0, 1e-12);
  EXPECT_LT(bleu4("a b c d", "w x y z"), 0.05);
  EXPECT_DOUBLE_EQ(bleu4("a b c d", "w x y z", BleuSmoothing::none), 0.0);
  EXPECT_DOUBLE_EQ(bleu4("a b c d", ""), 0.0);
}

TEST(Bleu, HandComputedPartialMatch) {
  // p1 = 3/4, p2 = 1/3, p3 = 0 -> 0.1/2, p4 = 0 -> 0.1/1, equal lengths.
  const double expected = std::exp((std::log(0.75) + std::log(1.0 / 3.0) + std::log(0.05) + std::log(0.1)) / 4.0);
  EXPECT_NEAR(bleu4("a b c d", "a b x d"), expected, 1e-12);
  // Brevity: hypothesis of 2 words against 4, only orders 1 and 2 count.
  EXPECT_NEAR(bleu4("a b c d", "a b"), std::exp(1.0 - 2.0), 1e-12);
}

TEST(Rouge, LcsF1) {
  EXPECT_DOUBLE_EQ(rouge_l("a b c d", "a b c d"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("a b c d", "a x c y"), 0.5);
  EXPECT_DOUBLE_EQ(rouge_l("a b", "c d"), 0.0);
  EXPECT_NEAR(rouge_l("a b c d", "a c"), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(rouge_l("", ""), 1.0);
}

TEST(BertScore, OverlapBackendAndAbsence) {
  TokenOverlapBackend overlap;
  EXPECT_DOUBLE_EQ(overlap.score("a b", "a c"), 0.5);
  EXPECT_DOUBLE_EQ(overlap.score("x y z", "x y z"), 1.0);
  EXPECT_FALSE(bert_score("a", "a", nullptr).has_value());
  EXPECT_EQ(*bert_score("a b", "a c", &overlap), 0.5);
  auto& reg = BertScoreRegistry::instance();
  const auto names = reg.names();
  EXPECT_NE(std::find(names.begin(), names.end(), "token-overlap"), names.end());
  EXPECT_EQ(reg.make("token-overlap")->name(), "token-overlap");
  EXPECT_THROW(reg.make("no-such-backend"), PreconditionError);
}

TEST(TextMetricProperties, BoundsAndPerfectValues) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps"};
  auto sentence = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
    return s;
  };
  for (int t = 0; t < 200; ++t) {
    const auto ref = sentence(1 + static_cast<int>(rng() % 8));
    const auto hyp = sentence(static_cast<int>(rng() % 9));
    const double b = bleu4(ref, hyp);
    const double r = rouge_l(ref, hyp);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0 + 1e-12);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_GE(wer(ref, hyp), 0.0);
    EXPECT_DOUBLE_EQ(wer(ref, ref), 0.0);
    EXPECT_NEAR(bleu4(ref, ref), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(rouge_l(ref, ref), 1.0);
  }
}

// ---- image metrics ---------------------------------------------------------------

TEST(Psnr, CapAndKnownValues) {
  const auto a = constant_image(0.5);
  EXPECT_DOUBLE_EQ(psnr(a, a), kPsnrCap);
  EXPECT_NEAR(psnr(a, constant_image(0.51)), 40.0, 1e-9);
  EXPECT_NEAR(psnr(a, constant_image(0.6)), 20.0, 1e-9);
  EXPECT_THROW(psnr(a, constant_image(0.5, 3, 32, 16)), GeometryError);
}

TEST(Ssim, IdentityInversionAndConstant) {
  const auto img = textured_cover(3, 32);
  EXPECT_NEAR(ssim(img, img), 1.0, 1e-12);
  auto inverted = img;
  for (auto& v : inverted.values()) v = 1.0 - v;
  EXPECT_LT(ssim(img, inverted), 0.0);
  EXPECT_NEAR(ssim(constant_image(0.3), constant_image(0.3)), 1.0, 1e-12);
  EXPECT_THROW(ssim(constant_image(0.5, 1, 8, 8), constant_image(0.5, 1, 8, 8)), GeometryError);
}

TEST(ImageMetricProperties, ResidualZeroGivesPerfectScores) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto cover = data::synthetic_cover(3, 32, 32, s);
    const auto stego = stegocore::insert(cover, ImageTensor(3, 32, 32, stegocore::ImageRole::residual),
                                         stegocore::ClampPolicy::none);
    EXPECT_DOUBLE_EQ(psnr(cover, stego), kPsnrCap);
    EXPECT_NEAR(ssim(cover, stego), 1.0, 1e-12);
    auto noisy = cover;
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (auto& v : noisy.values()) v = std::clamp(v + u(rng), 0.0, 1.0);
    EXPECT_LT(psnr(cover, noisy), kPsnrCap);
    EXPECT_LE(ssim(cover, noisy), 1.0);
    EXPECT_GE(ssim(cover, noisy), -1.0);
  }
}

// ---- bit payloads ----------------------------------------------------------------

TEST(Bits, HeaderAndLayout) {
  const auto p = utf8_to_bits("A");
  ASSERT_EQ(p.size(), 24u);
  const std::vector<std::uint8_t> expected = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0,
                                              0, 1, 0, 0, 0, 0, 0, 1};
  EXPECT_EQ(p.bits, expected);
  EXPECT_EQ(bits_to_utf8(p).text, "A");
  EXPECT_TRUE(bits_to_utf8(p).valid);
}

TEST(Bits, RoundTripAndCorruption) {
  for (const std::string s : {"", "hello world", "caf\xC3\xA9 \xE2\x82\xAC \xF0\x9F\x98\x80"}) {
    const auto d = bits_to_utf8(utf8_to_bits(s));
    EXPECT_TRUE(d.valid);
    EXPECT_EQ(d.text, s);
  }
  auto p = utf8_to_bits("\xC3\xA9");
  p.bits[kLengthHeaderBits + 8] = 0;  // continuation byte 10xxxxxx -> 00xxxxxx
  const auto d = bits_to_utf8(p);
  EXPECT_FALSE(d.valid);
  EXPECT_NE(d.text.find("\xEF\xBF\xBD"), std::string::npos);
  EXPECT_THROW(utf8_to_bits(std::string(8192, 'x')), PreconditionError);
  EXPECT_DOUBLE_EQ(bit_accuracy(random_bits(100, 1), random_bits(100, 1)), 1.0);
}

// ---- DWT-DCT baseline ------------------------------------------------------------

TEST(DwtDct, CapacityFormula) {
  EXPECT_EQ(dwtdct_capacity(3, 256, 256), 768);
  EXPECT_EQ(dwtdct_capacity(1, 64, 48), 12);
}

TEST(DwtDct, RecoversBitsOnFlatGray) {
  const auto cover = constant_image(0.5, 3, 256, 256);
  const auto bits = random_bits(256, 5);
  const auto stego = dwtdct_embed(cover, bits);
  EXPECT_TRUE(stego.in_unit_range());
  EXPECT_DOUBLE_EQ(bit_accuracy(bits, dwtdct_extract(stego, 256)), 1.0);
  EXPECT_THROW(dwtdct_embed(cover, random_bits(769, 1)), PreconditionError);
}

TEST(DwtDct, RecoveryOverCoverCorpus) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto cover = textured_cover(s, 128);
    const auto n = static_cast<std::size_t>(dwtdct_capacity(3, 128, 128));
    const auto bits = random_bits(n, s);
    const auto stego = dwtdct_embed(cover, bits);
    EXPECT_GE(bit_accuracy(bits, dwtdct_extract(stego, n)), 0.99) << "cover " << s;
    EXPECT_GT(psnr(cover, stego), 30.0);
  }
}

TEST(DwtDct, TextPayloadRoundTrip) {
  const auto cover = textured_cover(9, 256);
  const auto payload = utf8_to_bits("hidden words");
  const auto got = dwtdct_extract(dwtdct_embed(cover, payload), payload.size());
  EXPECT_EQ(bits_to_utf8(got).text, "hidden words");
  DwtDctConfig bad;
  bad.step = 0.0;
  EXPECT_THROW(bad.validate(), PreconditionError);
}

// ---- steganalysis ----------------------------------------------------------------

TEST(Roc, EndpointsMonotoneAndKnownAuc) {
  const std::vector<double> neg = {0.1, 0.2, 0.3, 0.4};
  const std::vector<double> pos = {0.35, 0.5, 0.6, 0.7};
  const auto roc = roc_curve(neg, pos);
  EXPECT_NEAR(roc.auc, 15.0 / 16.0, 1e-12);
  ASSERT_GE(roc.points.size(), 2u);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.front().tpr, 0.0);
  EXPECT_TRUE(std::isinf(roc.points.front().threshold));
  EXPECT_EQ(roc.points.back().fpr, 1.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
    EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
    EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
  }
  const std::vector<double> same = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(roc_curve(same, same).auc, 0.5);
  EXPECT_THROW(roc_curve(std::vector<double>{0.1}, pos), PreconditionError);
  std::ostringstream csv;
  write_roc_csv(csv, roc);
  EXPECT_EQ(csv.str().rfind("threshold,fpr,tpr\ninf,0,0\n", 0), 0u);
}

TEST(Steganalysis, IdenticalSetsGiveChanceAuc) {
  std::vector<ImageTensor> covers;
  for (std::uint64_t s = 0; s < 6; ++s) covers.push_back(textured_cover(s));
  EXPECT_DOUBLE_EQ(steganalyze(covers, covers).roc.auc, 0.5);
}

TEST(Steganalysis, FullRateLsbIsDetected) {
  std::vector<ImageTensor> covers;
  std::vector<ImageTensor> stegos;
  for (std::uint64_t s = 0; s < 10; ++s) {
    covers.push_back(textured_cover(s));
    stegos.push_back(lsb_embed_full_rate(covers.back(), s));
  }
  const auto report = steganalyze(covers, stegos);
  EXPECT_GT(report.roc.auc, 0.9);
  for (const auto& d : report.stego_scores) {
    EXPECT_GE(d.fused, 0.0);
    EXPECT_LE(d.fused, 1.0);
  }
}

// ---- evaluation suite ------------------------------------------------------------

TEST(Suite, IdentityStubGivesPerfectScores) {
  const stegocore::Geometry g{3, 32, 32, 16};
  IdentityStubSystem stub(g);
  const std::vector<std::string> secrets = {"first secret", "second one here", "third"};
  const auto covers = data::synthetic_covers(3, 3, 32, 32, 1);
  const auto report = evaluate_suite(stub, secrets, covers);
  ASSERT_EQ(report.records.size(), 3u);
  EXPECT_DOUBLE_EQ(report.aggregate.wer, 0.0);
  EXPECT_NEAR(report.aggregate.bleu4, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(report.aggregate.rouge_l, 1.0);
  EXPECT_DOUBLE_EQ(report.aggregate.psnr, kPsnrCap);
  EXPECT_NEAR(report.aggregate.ssim, 1.0, 1e-12);
  EXPECT_FALSE(report.aggregate.bert_score.has_value());
  EXPECT_FALSE(report.notice.empty());
  std::ostringstream csv;
  write_aggregate_csv(csv, report);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "subset,pairs,parse_failures,WER,BLEU,ROUGE,BERT-S,PSNR,SSIM");
}

TEST(Suite, GridPairingAndBertColumn) {
  IdentityStubSystem stub({3, 32, 32, 16});
  TokenOverlapBackend overlap;
  EvalConfig cfg;
  cfg.pairing = Pairing::grid;
  cfg.bert_backend = &overlap;
  cfg.quantize = true;
  const auto report = evaluate_suite(stub, {"x y", "z"}, data::synthetic_covers(3, 3, 32, 32, 2), cfg);
  EXPECT_EQ(report.records.size(), 6u);
  ASSERT_TRUE(report.aggregate.bert_score.has_value());
  EXPECT_DOUBLE_EQ(*report.aggregate.bert_score, 1.0);
  EXPECT_TRUE(report.notice.empty());
  EXPECT_EQ(parse_pairing(to_string(Pairing::grid)), Pairing::grid);
}

TEST(Suite, ReportFilesWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "semstego_report";
  std::filesystem::remove_all(dir);
  IdentityStubSystem stub({3, 32, 32, 16});
  write_report(dir, evaluate_suite(stub, {"only"}, data::synthetic_covers(1, 3, 32, 32, 0)));
  for (const char* f : {"pairs.jsonl", "aggregate.csv", "report.json"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
}

// ---- capacity --------------------------------------------------------------------

TEST(Capacity, CompressionRatios) {
  EXPECT_EQ(compression_ratio(32, 64), "1:2");
  EXPECT_EQ(compression_ratio(64, 64), "1:1");
  EXPECT_EQ(compression_ratio(128, 64), "2:1");
  EXPECT_EQ(compression_ratio(256, 64), "4:1");
}

TEST(Capacity, SweepWithoutHooksFillsRatiosOnly) {
  const std::vector<std::int64_t> lengths = {32, 64, 128, 256};
  const auto rows = capacity_sweep(lengths, {3, 256, 256, 32});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3].ratio, "4:1");
  std::ostringstream csv;
  write_capacity_csv(csv, rows);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "secret_tokens,compression_ratio,WER,BLEU,ROUGE,BERT-S,PSNR,SSIM");
  std::getline(in, line);
  EXPECT_EQ(line, "32,1:2,,,,,,");
}

TEST(Capacity, HookReceivesEveryLength) {
  std::vector<std::int64_t> seen;
  CapacityHooks hooks;
  hooks.train_and_evaluate = [&](std::int64_t t, const stegocore::Geometry&) {
    seen.push_back(t);
    CapacityPoint p;
    p.metrics.pairs = 1;
    p.mean_secret_tokens = static_cast<double>(t) - 0.5;
    return p;
  };
  const std::vector<std::int64_t> lengths = {8, 16};
  const auto rows = capacity_sweep(lengths, {3, 64, 64, 16}, hooks);
  EXPECT_EQ(seen, lengths);
  EXPECT_EQ(rows[0].ratio, "1:2");
  EXPECT_DOUBLE_EQ(rows[1].mean_secret_tokens, 15.5);
}
