#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "semstego/data/covers.hpp"
#include "semstego/evalbench/bits.hpp"
#include "semstego/evalbench/dwtdct.hpp"
#include "semstego/evalbench/metrics.hpp"
#include "semstego/evalbench/steganalysis.hpp"
#include "semstego/stegocore/image.hpp"
#include "semstego/textproto/protocol.hpp"

using namespace semstego;

namespace {

std::string sentence(std::size_t words, std::uint64_t seed) {
  static const std::vector<std::string> vocab = {"river", "stone", "light", "quiet", "harbor",
                                                 "morning", "blue", "garden", "train", "city"};
  std::mt19937_64 rng(seed);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
  return s;
}

void BM_Wer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ref = sentence(n, 1);
  const auto hyp = sentence(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::wer(ref, hyp));
}
BENCHMARK(BM_Wer)->Arg(16)->Arg(128);

void BM_Bleu4(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ref = sentence(n, 3);
  const auto hyp = sentence(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::bleu4(ref, hyp));
}
BENCHMARK(BM_Bleu4)->Arg(16)->Arg(128);

void BM_RougeL(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ref = sentence(n, 5);
  const auto hyp = sentence(n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::rouge_l(ref, hyp));
}
BENCHMARK(BM_RougeL)->Arg(16)->Arg(128);

void BM_Psnr(benchmark::State& state) {
  const auto a = data::synthetic_cover(3, state.range(0), state.range(0), 1);
  const auto b = data::synthetic_cover(3, state.range(0), state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::psnr(a, b));
}
BENCHMARK(BM_Psnr)->Arg(64)->Arg(256);

void BM_Ssim(benchmark::State& state) {
  const auto a = data::synthetic_cover(3, state.range(0), state.range(0), 1);
  const auto b = data::synthetic_cover(3, state.range(0), state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_PatchifyRoundTrip(benchmark::State& state) {
  const stegocore::Geometry g{3, state.range(0), state.range(0), state.range(1)};
  auto grid = stegocore::PatchGrid::zeros(g);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (auto& v : grid.values) v = n01(rng);
  for (auto _ : state) {
    auto img = stegocore::reshape_to_image(grid);
    benchmark::DoNotOptimize(stegocore::patchify(img, g.patch));
  }
}
BENCHMARK(BM_PatchifyRoundTrip)->Args({64, 16})->Args({256, 32});

void BM_DwtDctEmbed(benchmark::State& state) {
  const auto cover = data::synthetic_cover(3, 256, 256, 3);
  const auto bits = evalbench::random_bits(768, 1);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::dwtdct_embed(cover, bits));
}
BENCHMARK(BM_DwtDctEmbed);

void BM_DwtDctExtract(benchmark::State& state) {
  const auto stego = evalbench::dwtdct_embed(data::synthetic_cover(3, 256, 256, 3), evalbench::random_bits(768, 1));
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::dwtdct_extract(stego, 768));
}
BENCHMARK(BM_DwtDctExtract);

void BM_DetectorScores(benchmark::State& state) {
  const auto img = data::synthetic_cover(3, 128, 128, 4);
  for (auto _ : state) benchmark::DoNotOptimize(evalbench::detector_scores(img));
}
BENCHMARK(BM_DetectorScores);

void BM_TokenizerEncode(benchmark::State& state) {
  std::vector<std::string> corpus;
  for (std::uint64_t i = 0; i < 64; ++i) corpus.push_back(sentence(12, i));
  const auto tok = textproto::train_protocol_tokenizer(corpus, textproto::PromptTemplates::builtin());
  const auto text = sentence(static_cast<std::size_t>(state.range(0)), 99);
  for (auto _ : state) benchmark::DoNotOptimize(tok.encode(text));
}
BENCHMARK(BM_TokenizerEncode)->Arg(12)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
