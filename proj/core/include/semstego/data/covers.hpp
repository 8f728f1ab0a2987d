#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "semstego/stegocore/image.hpp"

namespace semstego::data {

struct CoverLoadReport {
  std::vector<std::filesystem::path> loaded;
  std::vector<std::filesystem::path> skipped;
};

/// Regular files of `directory` in filename order, center-cropped and
/// resized to height×width, in [0,1]. Gray sources are replicated when
/// `channels` is 3. Undecodable files are skipped with a warning.
/// `limit` 0 loads everything.
std::vector<stegocore::ImageTensor> load_covers(const std::filesystem::path& directory, std::int64_t height,
                                                std::int64_t width, std::size_t limit = 0, std::int64_t channels = 3,
                                                CoverLoadReport* report = nullptr);

/// Smooth procedural image: per-channel offset, linear ramps and a low
/// frequency sinusoid, deterministic in `seed`.
stegocore::ImageTensor synthetic_cover(std::int64_t channels, std::int64_t height, std::int64_t width,
                                       std::uint64_t seed);

std::vector<stegocore::ImageTensor> synthetic_covers(std::size_t n, std::int64_t channels, std::int64_t height,
                                                     std::int64_t width, std::uint64_t seed);

}  // namespace semstego::data
