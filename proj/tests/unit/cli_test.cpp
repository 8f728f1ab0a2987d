#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "semstego/cli/artifacts.hpp"
#include "semstego/cli/run_config.hpp"
#include "semstego/common/errors.hpp"

using namespace semstego;
using namespace semstego::cli;
namespace fs = std::filesystem;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Checksums, ManifestListsEveryFileButItself) {
  const auto dir = fs::temp_directory_path() / "semstego_sums";
  fs::remove_all(dir);
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "b.txt") << "abc";
  std::ofstream(dir / "sub" / "a.txt") << "";
  write_checksum_manifest(dir);
  const auto sums = read_text_file(dir / "SHA256SUMS");
  EXPECT_EQ(sums,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  b.txt\n"
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855  sub/a.txt\n");
  write_checksum_manifest(dir);
  EXPECT_EQ(read_text_file(dir / "SHA256SUMS"), sums);
}

TEST(RunConfigTest, DefaultsRoundTripAndResolvePaths) {
  const auto dir = fs::temp_directory_path() / "semstego_cfg";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RunConfig c;
  c.train_manifest = "secrets.jsonl";
  c.seed = 7;
  c.clamp = stegocore::ClampPolicy::none;
  write_json_file(dir / "run.json", c);
  const auto back = RunConfig::load(dir / "run.json");
  EXPECT_EQ(back.train_manifest, dir / "secrets.jsonl");
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.clamp, stegocore::ClampPolicy::none);
  EXPECT_EQ(back.stage1.stage, 1);
  EXPECT_EQ(back.stage2.stage, 2);
  EXPECT_EQ(nlohmann::json(back).at("stage2"), nlohmann::json(c).at("stage2"));
}

TEST(RunConfigTest, RejectsBadGeometryAndPreset) {
  const auto dir = fs::temp_directory_path() / "semstego_cfg_bad";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "geom.json") << R"({"geometry": {"channels": 3, "height": 65, "width": 64, "patch": 16}})";
  EXPECT_THROW(RunConfig::load(dir / "geom.json"), GeometryError);
  std::ofstream(dir / "preset.json") << R"({"model": {"preset": "external"}})";
  EXPECT_THROW(RunConfig::load(dir / "preset.json"), PreconditionError);
  std::ofstream(dir / "broken.json") << "{not json";
  EXPECT_THROW(RunConfig::load(dir / "broken.json"), FormatError);
  EXPECT_THROW(parse_clamp("soft"), PreconditionError);
}
