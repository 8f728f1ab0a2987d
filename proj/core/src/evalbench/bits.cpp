#include "semstego/evalbench/bits.hpp"

#include <algorithm>
#include <random>

#include "semstego/common/errors.hpp"

namespace semstego::evalbench {

BitPayload utf8_to_bits(std::string_view text) {
  const std::size_t n_bits = text.size() * 8;
  if (n_bits > 0xFFFF) throw PreconditionError("text too long for a 16-bit length header");
  BitPayload out;
  out.origin_text = std::string(text);
  out.bits.reserve(kLengthHeaderBits + n_bits);
  for (int b = 15; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>((n_bits >> b) & 1U));
  for (unsigned char c : text)
    for (int b = 7; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>((c >> b) & 1U));
  return out;
}

namespace {

void append_replacement(std::string& s) { s += "\xEF\xBF\xBD"; }

/// Copies valid UTF-8 sequences through and replaces each maximal invalid
/// subpart with U+FFFD.
bool sanitize_utf8(const std::string& in, std::string& out) {
  bool valid = true;
  std::size_t i = 0;
  const auto n = in.size();
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(in[k]); };
  while (i < n) {
    const unsigned char c = byte(i);
    std::size_t len = 0;
    unsigned char lo = 0x80, hi = 0xBF;
    if (c < 0x80) {
      out += static_cast<char>(c);
      ++i;
      continue;
    } else if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
    } else if (c >= 0xE0 && c <= 0xEF) {
      len = 3;
      if (c == 0xE0) lo = 0xA0;
      if (c == 0xED) hi = 0x9F;
    } else if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
      if (c == 0xF0) lo = 0x90;
      if (c == 0xF4) hi = 0x8F;
    } else {
      append_replacement(out);
      valid = false;
      ++i;
      continue;
    }
    std::size_t k = 1;
    for (; k < len && i + k < n; ++k) {
      const unsigned char cc = byte(i + k);
      const unsigned char l = k == 1 ? lo : 0x80;
      const unsigned char h = k == 1 ? hi : 0xBF;
      if (cc < l || cc > h) break;
    }
    if (k == len) {
      out.append(in, i, len);
    } else {
      append_replacement(out);
      valid = false;
    }
    i += k;
  }
  return valid;
}

}  // namespace

DecodedText bits_to_utf8(const BitPayload& payload) {
  DecodedText out;
  if (payload.bits.size() < kLengthHeaderBits) {
    out.valid = false;
    return out;
  }
  std::size_t declared = 0;
  for (std::size_t i = 0; i < kLengthHeaderBits; ++i) declared = (declared << 1) | (payload.bits[i] & 1U);
  const std::size_t available = payload.bits.size() - kLengthHeaderBits;
  bool header_ok = declared % 8 == 0 && declared <= available;
  const std::size_t n_bits = std::min(declared, available) / 8 * 8;
  std::string bytes;
  bytes.reserve(n_bits / 8);
  for (std::size_t i = 0; i < n_bits; i += 8) {
    unsigned v = 0;
    for (std::size_t b = 0; b < 8; ++b) v = (v << 1) | (payload.bits[kLengthHeaderBits + i + b] & 1U);
    bytes.push_back(static_cast<char>(v));
  }
  const bool utf_ok = sanitize_utf8(bytes, out.text);
  out.valid = header_ok && utf_ok;
  return out;
}

double bit_accuracy(const BitPayload& expected, const BitPayload& actual) {
  const auto n = std::max(expected.size(), actual.size());
  if (n == 0) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < std::min(expected.size(), actual.size()); ++i) same += expected.bits[i] == actual.bits[i];
  return static_cast<double>(same) / static_cast<double>(n);
}

BitPayload random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BitPayload out;
  out.bits.resize(n);
  for (auto& b : out.bits) b = static_cast<std::uint8_t>(rng() & 1U);
  return out;
}

}  // namespace semstego::evalbench
