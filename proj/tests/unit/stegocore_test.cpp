#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "semstego/stegocore/image_io.hpp"
#include "semstego/stegocore/pipeline.hpp"
#include "semstego/training/checkpoint.hpp"

using namespace semstego;
using namespace semstego::stegocore;

namespace {

PatchGrid random_grid(const Geometry& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  auto p = PatchGrid::zeros(g);
  for (auto& v : p.values) v = dist(rng);
  return p;
}

ImageTensor filled(std::int64_t c, std::int64_t h, std::int64_t w, double v) { return ImageTensor(c, h, w, ImageRole::cover, v); }

StegoUnit& shared_unit() {
  static auto unit = fixtures::make_desk_unit(fixtures::memorization_secrets());
  return *unit;
}

}  // namespace

// ---- geometry, reshape, patchify ------------------------------------------

TEST(Geometry, FullResolutionGivesSixtyFourPatches) {
  const Geometry g{3, 128, 128, 16};
  g.validate();
  EXPECT_EQ(g.num_patches(), 64);
  EXPECT_EQ(g.patch_dim(), 768);
}

TEST(Geometry, RejectsIndivisibleAndZeroPatch) {
  EXPECT_THROW((Geometry{3, 100, 64, 16}.validate()), GeometryError);
  EXPECT_THROW((Geometry{3, 64, 64, 0}.validate()), GeometryError);
}

TEST(Reshape, ZerosMapToZeros) {
  const Geometry g{3, 64, 64, 16};
  const auto img = reshape_to_image(PatchGrid::zeros(g));
  for (double v : img.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(img.role(), ImageRole::residual);
}

TEST(Reshape, SingleHotLandsAtComputedPixel) {
  const Geometry g{3, 128, 128, 16};
  for (std::int64_t k : {0, 5, 9, 63}) {
    for (std::int64_t e : {0, 1, 16, 300, 767}) {
      auto p = PatchGrid::zeros(g);
      p.at(k, e) = 1.0;
      const auto img = reshape_to_image(p);
      const auto cols = g.width / g.patch;
      const auto ch = e / (g.patch * g.patch);
      const auto y = (k / cols) * g.patch + (e % (g.patch * g.patch)) / g.patch;
      const auto x = (k % cols) * g.patch + e % g.patch;
      int nonzero = 0;
      for (double v : img.values()) nonzero += v != 0.0;
      EXPECT_EQ(nonzero, 1);
      EXPECT_EQ(img.at(ch, y, x), 1.0) << "k=" << k << " e=" << e;
    }
  }
}

TEST(Patchify, RoundTripOnRandomGrid) {
  const Geometry g{3, 64, 128, 16};
  const auto p = random_grid(g, 1);
  const auto back = patchify(reshape_to_image(p), g.patch);
  EXPECT_EQ(back.values, p.values);
  EXPECT_EQ(back.geometry, g);
}

TEST(Patchify, FullEvalResolution) {
  const auto grid = patchify(filled(3, 256, 256, 0.1), 32);
  EXPECT_EQ(grid.geometry.num_patches(), 64);
  EXPECT_EQ(grid.geometry.patch_dim(), 3072);
  EXPECT_EQ(grid.values.size(), 64u * 3072u);
}

TEST(Patchify, RejectsBadPatchSize) {
  EXPECT_THROW(patchify(filled(3, 64, 64, 0), 0), GeometryError);
  EXPECT_THROW(patchify(filled(3, 64, 64, 0), 24), GeometryError);
}

TEST(TensorBridges, MatchScalarLayout) {
  const Geometry g{2, 32, 48, 8};
  const auto p = random_grid(g, 2);
  const auto img = reshape_to_image(p);
  const auto t_img = patches_to_image(to_tensor(p, torch::kFloat64), g);
  EXPECT_EQ(image_from_tensor(t_img, ImageRole::residual), img);
  const auto t_rows = image_to_patches(to_tensor(img, torch::kFloat64), g);
  EXPECT_EQ(patches_from_tensor(t_rows, g).values, p.values);
}

TEST(TensorBridges, BatchedLayoutMatchesPerItem) {
  const Geometry g{3, 32, 32, 16};
  const auto a = random_grid(g, 3);
  const auto b = random_grid(g, 4);
  const auto batch = torch::stack({to_tensor(a, torch::kFloat64), to_tensor(b, torch::kFloat64)});
  const auto imgs = patches_to_image(batch, g);
  EXPECT_TRUE(torch::equal(imgs[1], patches_to_image(to_tensor(b, torch::kFloat64), g)));
  EXPECT_TRUE(torch::equal(image_to_patches(imgs, g), batch));
}

// ---- insert / quantize ----------------------------------------------------

TEST(Insert, ZeroResidualKeepsCover) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor cover(3, 16, 16);
  for (auto& v : cover.values()) v = u(rng);
  const ImageTensor zero(3, 16, 16, ImageRole::residual);
  EXPECT_EQ(insert(cover, zero, ClampPolicy::none), cover);
  EXPECT_EQ(insert(cover, zero, ClampPolicy::hard), cover);
}

TEST(Insert, UnclampedDifferenceIsResidual) {
  const auto stego = insert(filled(3, 8, 8, 0.5), ImageTensor(3, 8, 8, ImageRole::residual, 0.01), ClampPolicy::none);
  for (double v : stego.values()) EXPECT_EQ(v, 0.5 + 0.01);
  EXPECT_EQ(stego.role(), ImageRole::stego);
}

TEST(Insert, HardClampClips) {
  const auto stego = insert(filled(1, 4, 4, 1.0), ImageTensor(1, 4, 4, ImageRole::residual, 0.5), ClampPolicy::hard);
  for (double v : stego.values()) EXPECT_EQ(v, 1.0);
  const auto low = insert(filled(1, 4, 4, 0.0), ImageTensor(1, 4, 4, ImageRole::residual, -0.5), ClampPolicy::hard);
  for (double v : low.values()) EXPECT_EQ(v, 0.0);
  const auto raw = insert(filled(1, 4, 4, 1.0), ImageTensor(1, 4, 4, ImageRole::residual, 0.5), ClampPolicy::none);
  for (double v : raw.values()) EXPECT_EQ(v, 1.5);
}

TEST(Insert, ShapeMismatchThrows) {
  EXPECT_THROW(insert(filled(3, 8, 8, 0), ImageTensor(3, 8, 16, ImageRole::residual), ClampPolicy::none),
               GeometryError);
}

TEST(Quantize, EndpointsAndRoundingRule) {
  ImageTensor img(1, 1, 3, std::vector<double>{0.0, 1.0, 0.5});
  const auto q = quantize(img, 8);
  EXPECT_EQ(q.values()[0], 0.0);
  EXPECT_EQ(q.values()[1], 1.0);
  EXPECT_DOUBLE_EQ(q.values()[2], 128.0 / 255.0);
}

TEST(Quantize, ErrorWithinHalfStep) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor img(3, 32, 32);
  for (auto& v : img.values()) v = u(rng);
  const auto q = quantize(img, 8);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(q.values()[i] - img.values()[i]), 1.0 / 510.0 + 1e-15);
}

TEST(Quantize, OutOfRangeThrows) {
  ImageTensor img(1, 1, 2, std::vector<double>{0.2, 1.2});
  EXPECT_THROW(quantize(img, 8), PreconditionError);
}

// ---- mask strategy ---------------------------------------------------------

TEST(Mask, RatioZeroIsIdentityAndOneZeroesAll) {
  std::mt19937_64 rng(7);
  const auto e = torch::randn({16, 8});
  EXPECT_TRUE(torch::equal(apply_mask(e, 0.0, rng), e));
  EXPECT_EQ(apply_mask(e, 1.0, rng).abs().sum().item<float>(), 0.0f);
}

TEST(Mask, QuarterOfSixtyFourRows) {
  std::mt19937_64 rng(8);
  const auto e = torch::randn({64, 12}) + 5.0;
  const auto m = apply_mask(e, 0.25, rng);
  const auto zero_rows = (m.abs().sum(1) == 0).sum().item<std::int64_t>();
  EXPECT_EQ(zero_rows, 16);
  const auto kept = m.abs().sum(1) != 0;
  EXPECT_TRUE(torch::equal(m.index({kept}), e.index({kept})));
}

TEST(Mask, ExactCountForEveryRatio) {
  std::mt19937_64 rng(9);
  for (std::int64_t n : {1, 7, 16, 64}) {
    for (double r : {0.0, 0.1, 0.25, 0.33, 0.5, 0.9, 1.0}) {
      const auto rows = sample_masked_rows(n, r, rng);
      EXPECT_EQ(static_cast<std::int64_t>(rows.size()), std::llround(r * static_cast<double>(n)));
      EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
      EXPECT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
    }
  }
}

TEST(Mask, RatioOutsideUnitIntervalThrows) {
  std::mt19937_64 rng(10);
  EXPECT_THROW(apply_mask(torch::ones({4, 2}), -0.1, rng), PreconditionError);
  EXPECT_THROW(apply_mask(torch::ones({4, 2}), 1.5, rng), PreconditionError);
}

TEST(Mask, MaskedSubsetsAreUniform) {
  // N = 8, R = 0.25: two rows out of eight, 28 equally likely subsets.
  std::map<std::vector<std::int64_t>, int> counts;
  const int trials = 28 * 400;
  for (int s = 0; s < trials; ++s) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(s) * 2654435761ULL + 1);
    ++counts[sample_masked_rows(8, 0.25, rng)];
  }
  ASSERT_EQ(counts.size(), 28u);
  const double expected = trials / 28.0;
  double chi = 0.0;
  for (const auto& [k, c] : counts) chi += (c - expected) * (c - expected) / expected;
  // 27 degrees of freedom, 0.1% critical value.
  EXPECT_LT(chi, 55.48);
}

// ---- projectors -----------------------------------------------------------

TEST(Projector, ZeroOutputLayerGivesZeroPatches) {
  Projector t2p(ProjectorConfig{128, 768, 0, Activation::gelu});
  t2p->zero_output_layer();
  const auto out = t2p->forward(torch::randn({64, 128}));
  EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{64, 768}));
  EXPECT_EQ(out.abs().sum().item<float>(), 0.0f);
}

TEST(Projector, ShapesIncludingBatchOfOne) {
  Projector t2p(ProjectorConfig{128, 768, 0, Activation::gelu});
  Projector p2t(ProjectorConfig{768, 128, 0, Activation::gelu});
  EXPECT_EQ(t2p->forward(torch::randn({64, 128})).sizes(), (std::vector<std::int64_t>{64, 768}));
  EXPECT_EQ(p2t->forward(torch::randn({64, 768})).sizes(), (std::vector<std::int64_t>{64, 128}));
  EXPECT_EQ(t2p->forward(torch::randn({1, 128})).sizes(), (std::vector<std::int64_t>{1, 768}));
  EXPECT_EQ(t2p->forward(torch::randn({2, 5, 128})).sizes(), (std::vector<std::int64_t>{2, 5, 768}));
}

TEST(Projector, WidthMismatchThrows) {
  Projector t2p(ProjectorConfig{128, 768, 0, Activation::gelu});
  EXPECT_THROW(t2p->forward(torch::randn({4, 64})), PreconditionError);
}

TEST(Projector, AffineIdentityWithoutNonlinearity) {
  torch::manual_seed(1);
  Projector t2p(ProjectorConfig{32, 48, 40, Activation::identity});
  t2p->to(torch::kFloat64);
  const auto a = torch::randn({6, 32}, torch::kFloat64);
  const auto b = torch::randn({6, 32}, torch::kFloat64);
  const auto zero = torch::zeros({6, 32}, torch::kFloat64);
  const auto lhs = t2p->forward(a + b);
  const auto rhs = t2p->forward(a) + t2p->forward(b) - t2p->forward(zero);
  EXPECT_LT((lhs - rhs).abs().max().item<double>(), 1e-12);
}

TEST(Projector, ZeroInputWithZeroBiasesGivesZero) {
  Projector p2t(ProjectorConfig{768, 128, 0, Activation::gelu});
  p2t->zero_biases();
  EXPECT_EQ(p2t->forward(torch::zeros({64, 768})).abs().sum().item<float>(), 0.0f);
}

// ---- model-side ops and golden values --------------------------------------

TEST(Smes, ShapeMatchesPatchCount) {
  for (const Geometry& g : {Geometry{3, 64, 64, 16}, Geometry{3, 128, 128, 16}, Geometry{1, 64, 32, 8}}) {
    auto unit = fixtures::make_desk_unit(fixtures::memorization_secrets(), 0, g);
    const auto e = unit_smes(*unit, "the cat sat on the warm mat");
    EXPECT_EQ(e.size(0), g.num_patches());
    EXPECT_EQ(e.size(1), unit->model().embedding_width());
    EXPECT_TRUE(torch::isfinite(e).all().item<bool>());
  }
}

TEST(Smes, DeterministicAndPositionChecked) {
  auto& unit = shared_unit();
  EXPECT_TRUE(torch::equal(unit_smes(unit, "rain falls softly over the quiet city"),
                           unit_smes(unit, "rain falls softly over the quiet city")));
  const std::vector<TokenId> ids{1, 2, 3};
  const std::vector<std::size_t> bad{1, 3};
  EXPECT_THROW(extract_smes(unit.model(), ids, bad), PreconditionError);
}

TEST(Smes, SelectsHiddenStatesAtPositions) {
  auto& unit = shared_unit();
  const auto in = unit.embed_input(unit.wrap("the cat sat on the warm mat"));
  const std::vector<std::size_t> pos{2, 0, 5};
  torch::NoGradGuard ng;
  unit.set_training(false);
  const auto sub = extract_smes(unit.model(), in.ids, pos);
  const auto all = unit.model().forward_hidden_states(
      unit.model().input_embedding_lookup(torch::tensor(std::vector<std::int64_t>(in.ids.begin(), in.ids.end())).unsqueeze(0)))[0];
  for (std::size_t i = 0; i < pos.size(); ++i)
    EXPECT_TRUE(torch::allclose(sub[static_cast<std::int64_t>(i)], all[static_cast<std::int64_t>(pos[i])]));
}

TEST(Golden, SeedPinnedInitialisation) {
  auto unit = fixtures::make_desk_unit(fixtures::memorization_secrets(), 0);
  torch::NoGradGuard ng;
  const auto smes = unit_smes(*unit, "the cat sat on the warm mat").contiguous();
  torch::manual_seed(42);
  const auto probe = torch::rand({16, unit->geometry().patch_dim()});
  const auto p2t_out = unit->p2t()->forward(probe).contiguous();
  const auto t2p_out = unit->t2p()->forward(smes).contiguous();
  nlohmann::json now = {{"smes_crc32", training::tensor_crc32(smes)},
                        {"p2t_crc32", training::tensor_crc32(p2t_out)},
                        {"t2p_crc32", training::tensor_crc32(t2p_out)}};
  const std::filesystem::path file = SEMSTEGO_GOLDEN_DIR "/stegocore.json";
  if (std::getenv("SEMSTEGO_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(file) << now.dump(2) << '\n';
    GTEST_SKIP() << "golden file rewritten";
  }
  std::ifstream in(file);
  ASSERT_TRUE(in) << "missing " << file;
  const auto golden = nlohmann::json::parse(in);
  EXPECT_EQ(now["smes_crc32"], golden["smes_crc32"]);
  EXPECT_EQ(now["p2t_crc32"], golden["p2t_crc32"]);
  EXPECT_EQ(now["t2p_crc32"], golden["t2p_crc32"]);
}

// ---- embed / decode ---------------------------------------------------------

TEST(Embed, Deterministic) {
  auto& unit = shared_unit();
  const auto cover = filled(3, 64, 64, 0.4);
  const auto a = embed_message(unit, "the train leaves at seven sharp", cover, ClampPolicy::hard);
  const auto b = embed_message(unit, "the train leaves at seven sharp", cover, ClampPolicy::hard);
  EXPECT_EQ(a.stego, b.stego);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(Embed, ZeroCoverGivesClampedResidual) {
  auto& unit = shared_unit();
  const auto out = embed_message(unit, "the cat sat on the warm mat", filled(3, 64, 64, 0.0), ClampPolicy::hard);
  for (std::size_t i = 0; i < out.residual.size(); ++i)
    EXPECT_EQ(out.stego.values()[i], std::clamp(out.residual.values()[i], 0.0, 1.0));
  const auto raw = embed_message(unit, "the cat sat on the warm mat", filled(3, 64, 64, 0.0), ClampPolicy::none);
  for (std::size_t i = 0; i < raw.residual.size(); ++i) EXPECT_EQ(raw.stego.values()[i], raw.residual.values()[i]);
}

TEST(Embed, GeometryMismatchThrows) {
  auto& unit = shared_unit();
  EXPECT_THROW(embed_message(unit, "hello", filled(3, 32, 64, 0.5), ClampPolicy::hard), GeometryError);
  EXPECT_THROW(decode_message(unit, filled(3, 64, 32, 0.5), 8), GeometryError);
}

TEST(Decode, DeterministicAndNeverThrowsOnGarbage) {
  auto& unit = shared_unit();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor noise(3, 64, 64, ImageRole::stego);
  for (auto& v : noise.values()) v = u(rng);
  const auto a = decode_message(unit, noise, unit.max_decode_len());
  const auto b = decode_message(unit, noise, unit.max_decode_len());
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.status, b.status);
}

TEST(Unit, NamedTensorsCoverEveryParameter) {
  auto& unit = shared_unit();
  const auto named = unit.named_tensors();
  std::size_t model = 0, t2p = 0, p2t = 0;
  for (const auto& [name, t] : named) {
    model += name.starts_with("model.");
    t2p += name.starts_with("t2p.");
    p2t += name.starts_with("p2t.");
  }
  EXPECT_EQ(t2p, 4u);
  EXPECT_EQ(p2t, 4u);
  EXPECT_EQ(model, unit.model().parameter_groups().all().size());
}

// ---- image files --------------------------------------------------------------

TEST(ImageIo, FloatContainerIsLossless) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> d;
  ImageTensor img(3, 8, 12, ImageRole::stego);
  for (auto& v : img.values()) v = 0.5 + 0.1 * d(rng);
  const auto path = std::filesystem::temp_directory_path() / "semstego_float_rt.sfi";
  write_float_image(path, img, FloatDtype::float64);
  EXPECT_TRUE(is_float_container(path));
  EXPECT_EQ(read_float_image(path).values().size(), img.size());
  const auto back = read_any_image(path);
  EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), img.values().begin()));
  EXPECT_EQ(std::filesystem::file_size(path), 32u + img.size() * 8u);
  std::filesystem::remove(path);
}

TEST(ImageIo, FloatContainerHeaderLayout) {
  const auto path = std::filesystem::temp_directory_path() / "semstego_float_hdr.sfi";
  write_float_image(path, ImageTensor(3, 4, 5), FloatDtype::float32);
  std::ifstream in(path, std::ios::binary);
  char hdr[32];
  in.read(hdr, 32);
  EXPECT_EQ(std::string(hdr, 8), "SSTGFLT1");
  auto u32 = [&](int off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(hdr[off + i]);
    return v;
  };
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 4u);
  EXPECT_EQ(u32(20), 5u);
  EXPECT_EQ(u32(24), 1u);
  EXPECT_EQ(std::filesystem::file_size(path), 32u + 60u * 4u);
  std::filesystem::remove(path);
}

TEST(ImageIo, PngRoundTripOfQuantizedImage) {
  std::mt19937 rng(14);
  ImageTensor img(3, 16, 16);
  for (auto& v : img.values()) v = static_cast<double>(rng() % 256) / 255.0;
  const auto path = std::filesystem::temp_directory_path() / "semstego_png_rt.png";
  write_png(path, img);
  EXPECT_FALSE(is_float_container(path));
  const auto back = read_any_image(path);
  EXPECT_TRUE(back.same_shape(img));
  EXPECT_TRUE(std::ranges::equal(back.values(), img.values()));
  std::filesystem::remove(path);
}
