#include "semstego/evalbench/dwtdct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "semstego/common/errors.hpp"

namespace semstego::evalbench {

using stegocore::ImageTensor;

void DwtDctConfig::validate() const {
  if (block <= 0) throw PreconditionError("DWT-DCT block size must be positive");
  if (coef_row < 0 || coef_row >= block || coef_col < 0 || coef_col >= block) {
    throw PreconditionError("DWT-DCT coefficient index outside the block");
  }
  if (coef_row == 0 && coef_col == 0) throw PreconditionError("DWT-DCT must not modulate the DC coefficient");
  if (!(step > 0.0)) throw PreconditionError("DWT-DCT quantization step must be positive");
}

std::int64_t dwtdct_capacity(std::int64_t channels, std::int64_t height, std::int64_t width,
                             const DwtDctConfig& cfg) {
  cfg.validate();
  if (channels <= 0 || height <= 0 || width <= 0) throw PreconditionError("image sizes must be positive");
  return channels * (height / 2 / cfg.block) * (width / 2 / cfg.block);
}

namespace {

struct Bands {
  std::int64_t h = 0, w = 0;  // band size
  std::vector<double> ll, lh, hl, hh;
};

Bands haar_forward(const ImageTensor& img, std::int64_t c) {
  Bands b;
  b.h = img.height() / 2;
  b.w = img.width() / 2;
  const auto n = static_cast<std::size_t>(b.h * b.w);
  b.ll.resize(n);
  b.lh.resize(n);
  b.hl.resize(n);
  b.hh.resize(n);
  for (std::int64_t y = 0; y < b.h; ++y)
    for (std::int64_t x = 0; x < b.w; ++x) {
      const double p = img.at(c, 2 * y, 2 * x);
      const double q = img.at(c, 2 * y, 2 * x + 1);
      const double r = img.at(c, 2 * y + 1, 2 * x);
      const double s = img.at(c, 2 * y + 1, 2 * x + 1);
      const auto k = static_cast<std::size_t>(y * b.w + x);
      b.ll[k] = (p + q + r + s) / 2.0;
      b.lh[k] = (p - q + r - s) / 2.0;
      b.hl[k] = (p + q - r - s) / 2.0;
      b.hh[k] = (p - q - r + s) / 2.0;
    }
  return b;
}

void haar_inverse(const Bands& b, ImageTensor& img, std::int64_t c) {
  for (std::int64_t y = 0; y < b.h; ++y)
    for (std::int64_t x = 0; x < b.w; ++x) {
      const auto k = static_cast<std::size_t>(y * b.w + x);
      const double a = b.ll[k], d = b.lh[k], e = b.hl[k], f = b.hh[k];
      img.at(c, 2 * y, 2 * x) = (a + d + e + f) / 2.0;
      img.at(c, 2 * y, 2 * x + 1) = (a - d + e - f) / 2.0;
      img.at(c, 2 * y + 1, 2 * x) = (a + d - e - f) / 2.0;
      img.at(c, 2 * y + 1, 2 * x + 1) = (a - d - e + f) / 2.0;
    }
}

/// Orthonormal DCT-II basis, row k holds frequency k.
std::vector<double> dct_matrix(std::int64_t n) {
  std::vector<double> m(static_cast<std::size_t>(n * n));
  for (std::int64_t k = 0; k < n; ++k)
    for (std::int64_t i = 0; i < n; ++i) {
      const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
      m[static_cast<std::size_t>(k * n + i)] =
          scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                           (2.0 * static_cast<double>(n)));
    }
  return m;
}

/// Coefficient (u,v) of the block at (by,bx) of `band`.
double block_coef(const std::vector<double>& band, std::int64_t bw, std::int64_t by, std::int64_t bx,
                  std::int64_t n, const std::vector<double>& d, std::int64_t u, std::int64_t v) {
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      s += d[static_cast<std::size_t>(u * n + i)] * d[static_cast<std::size_t>(v * n + j)] *
           band[static_cast<std::size_t>((by * n + i) * bw + bx * n + j)];
    }
  return s;
}

/// Adds delta to coefficient (u,v), i.e. delta times its basis image.
void shift_coef(std::vector<double>& band, std::int64_t bw, std::int64_t by, std::int64_t bx, std::int64_t n,
                const std::vector<double>& d, std::int64_t u, std::int64_t v, double delta) {
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      band[static_cast<std::size_t>((by * n + i) * bw + bx * n + j)] +=
          delta * d[static_cast<std::size_t>(u * n + i)] * d[static_cast<std::size_t>(v * n + j)];
    }
}

int parity_of(double coef, double step) {
  const auto q = static_cast<long long>(std::llround(coef / step));
  return static_cast<int>(((q % 2) + 2) % 2);
}

double qim_target(double coef, double step, int bit) {
  const double t = coef / step;
  auto q = static_cast<long long>(std::llround(t));
  if ((((q % 2) + 2) % 2) != bit) q += (t >= static_cast<double>(q)) ? 1 : -1;
  return static_cast<double>(q) * step;
}

}  // namespace

ImageTensor dwtdct_embed(const ImageTensor& cover, const BitPayload& payload, const DwtDctConfig& cfg) {
  const auto cap = dwtdct_capacity(cover.channels(), cover.height(), cover.width(), cfg);
  if (static_cast<std::int64_t>(payload.size()) > cap) {
    throw PreconditionError("payload of " + std::to_string(payload.size()) + " bits exceeds DWT-DCT capacity " +
                            std::to_string(cap));
  }
  ImageTensor out = cover;
  out.set_role(stegocore::ImageRole::stego);
  const auto n = cfg.block;
  const auto d = dct_matrix(n);
  std::size_t idx = 0;
  for (std::int64_t c = 0; c < cover.channels() && idx < payload.size(); ++c) {
    auto bands = haar_forward(cover, c);
    const auto rows = bands.h / n;
    const auto cols = bands.w / n;
    for (std::int64_t by = 0; by < rows && idx < payload.size(); ++by)
      for (std::int64_t bx = 0; bx < cols && idx < payload.size(); ++bx, ++idx) {
        const double coef = block_coef(bands.ll, bands.w, by, bx, n, d, cfg.coef_row, cfg.coef_col);
        const double target = qim_target(coef, cfg.step, payload.bits[idx] & 1);
        shift_coef(bands.ll, bands.w, by, bx, n, d, cfg.coef_row, cfg.coef_col, target - coef);
      }
    haar_inverse(bands, out, c);
  }
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

BitPayload dwtdct_extract(const ImageTensor& stego, std::size_t n_bits, const DwtDctConfig& cfg) {
  const auto cap = dwtdct_capacity(stego.channels(), stego.height(), stego.width(), cfg);
  if (static_cast<std::int64_t>(n_bits) > cap) {
    throw PreconditionError("cannot read " + std::to_string(n_bits) + " bits; DWT-DCT capacity is " +
                            std::to_string(cap));
  }
  BitPayload out;
  out.bits.reserve(n_bits);
  const auto n = cfg.block;
  const auto d = dct_matrix(n);
  for (std::int64_t c = 0; c < stego.channels() && out.size() < n_bits; ++c) {
    const auto bands = haar_forward(stego, c);
    const auto rows = bands.h / n;
    const auto cols = bands.w / n;
    for (std::int64_t by = 0; by < rows && out.size() < n_bits; ++by)
      for (std::int64_t bx = 0; bx < cols && out.size() < n_bits; ++bx) {
        const double coef = block_coef(bands.ll, bands.w, by, bx, n, d, cfg.coef_row, cfg.coef_col);
        out.bits.push_back(static_cast<std::uint8_t>(parity_of(coef, cfg.step)));
      }
  }
  return out;
}

}  // namespace semstego::evalbench
