#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "semstego/common/errors.hpp"

namespace semstego::app {

/// Flag combinations CLI11 cannot express; maps to exit code 64.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct BuildDatasetArgs {
  std::filesystem::path spec;
  std::filesystem::path out;
};

struct TrainArgs {
  int stage = 1;
  std::filesystem::path config;
  std::filesystem::path init;
  std::filesystem::path out;
  std::int64_t steps = 0;
  std::int64_t seed = -1;
};

struct EmbedArgs {
  std::filesystem::path ckpt;
  std::filesystem::path cover;
  std::string message;
  std::filesystem::path message_file;
  std::filesystem::path out;
  bool quantize = false;
  std::string clamp = "hard";
  std::uint64_t seed = 0;
};

struct DecodeArgs {
  std::filesystem::path ckpt;
  std::filesystem::path stego;
  std::int64_t max_len = 0;
  std::filesystem::path out;
};

struct EvaluateArgs {
  std::filesystem::path ckpt;
  std::string model = "checkpoint";
  std::filesystem::path manifest;
  std::filesystem::path covers;
  std::size_t synthetic_covers = 16;
  std::string pairing = "zip";
  bool quantize = false;
  std::string clamp = "hard";
  std::string bert_backend;
  std::string subset = "eval";
  std::int64_t channels = 3;
  std::int64_t height = 64;
  std::int64_t width = 64;
  std::int64_t patch = 16;
  std::filesystem::path out;
  std::uint64_t seed = 0;
};

struct CapacityArgs {
  std::filesystem::path config;
  std::filesystem::path out;
};

struct SteganalyzeArgs {
  std::filesystem::path covers;
  std::filesystem::path stegos;
  std::filesystem::path out;
  bool plot = false;
};

struct GenerateArgs {
  std::filesystem::path client_config;
  std::size_t n = 0;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::int64_t min_words = 100;
  std::int64_t max_words = 500;
};

int run_build_dataset(const BuildDatasetArgs& a);
int run_train(const TrainArgs& a);
int run_embed(const EmbedArgs& a);
int run_decode(const DecodeArgs& a);
int run_evaluate(const EvaluateArgs& a);
int run_capacity_sweep(const CapacityArgs& a);
int run_steganalyze(const SteganalyzeArgs& a);
int run_generate(const GenerateArgs& a);

}  // namespace semstego::app
