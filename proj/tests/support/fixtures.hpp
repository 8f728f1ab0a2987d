#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "semstego/stegocore/pipeline.hpp"

namespace semstego::fixtures {

/// Sixteen short secrets used by the memorization runs.
const std::vector<std::string>& memorization_secrets();

/// 3×64×64 covers with 16×16 patches (N = 16).
stegocore::Geometry desk_geometry();

/// Tiny-backbone unit whose tokenizer is trained on `secrets`.
std::unique_ptr<stegocore::StegoUnit> make_desk_unit(const std::vector<std::string>& secrets, std::uint64_t seed = 0,
                                                     stegocore::Geometry geometry = desk_geometry());

}  // namespace semstego::fixtures
