#pragma once

#include <cstdint>

#include "semstego/evalbench/bits.hpp"
#include "semstego/stegocore/image.hpp"

namespace semstego::evalbench {

/// Blind DWT-DCT watermark: level-1 Haar approximation band per channel, 8×8
/// orthonormal DCT blocks, one bit per block carried by quantization-index
/// modulation of a single mid-band coefficient.
struct DwtDctConfig {
  std::int64_t block = 8;
  /// Coefficient (row, col) inside the DCT block.
  std::int64_t coef_row = 3;
  std::int64_t coef_col = 4;
  /// Quantization step on the [0,1] intensity scale of the LL band.
  double step = 0.1;

  void validate() const;
};

/// channels · floor(H/2/block) · floor(W/2/block). 768 for RGB 256×256.
std::int64_t dwtdct_capacity(std::int64_t channels, std::int64_t height, std::int64_t width,
                             const DwtDctConfig& cfg = {});

/// Bits go channel by channel, blocks in row-major order. The result is
/// clamped to [0,1]. Throws PreconditionError when the payload exceeds
/// capacity.
stegocore::ImageTensor dwtdct_embed(const stegocore::ImageTensor& cover, const BitPayload& payload,
                                    const DwtDctConfig& cfg = {});

/// Reads the first `n_bits` slots. Throws PreconditionError past capacity.
BitPayload dwtdct_extract(const stegocore::ImageTensor& stego, std::size_t n_bits, const DwtDctConfig& cfg = {});

}  // namespace semstego::evalbench
