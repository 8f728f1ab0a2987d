#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semstego::evalbench {

/// Bit sequence, optionally with the text it encodes.
struct BitPayload {
  std::vector<std::uint8_t> bits;  // 0 or 1
  std::optional<std::string> origin_text;

  [[nodiscard]] std::size_t size() const { return bits.size(); }
};

inline constexpr std::size_t kLengthHeaderBits = 16;

/// 16-bit big-endian count of payload bits, then the UTF-8 bytes of `text`,
/// most significant bit first. Throws PreconditionError past 65535 bits.
BitPayload utf8_to_bits(std::string_view text);

struct DecodedText {
  std::string text;
  /// false when the bytes were not valid UTF-8 or the header disagreed with
  /// the payload; offending sequences become U+FFFD.
  bool valid = true;
};

DecodedText bits_to_utf8(const BitPayload& payload);

/// Fraction of positions where both payloads agree, over the longer length.
double bit_accuracy(const BitPayload& expected, const BitPayload& actual);

/// Uniform random bits from a seeded engine.
BitPayload random_bits(std::size_t n, std::uint64_t seed);

}  // namespace semstego::evalbench
