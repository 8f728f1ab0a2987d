#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "semstego/common/errors.hpp"

namespace semstego::stegocore {

/// Image and patch layout shared by embedding and decoding.
///
/// N = (H/P)·(W/P) patches, each flattened to d_patch = C·P·P values.
struct Geometry {
  std::int64_t channels = 3;
  std::int64_t height = 64;
  std::int64_t width = 64;
  std::int64_t patch = 16;

  /// Throws GeometryError unless all sizes are positive and H, W are
  /// multiples of P.
  void validate() const;
  [[nodiscard]] std::int64_t grid_rows() const { return height / patch; }
  [[nodiscard]] std::int64_t grid_cols() const { return width / patch; }
  [[nodiscard]] std::int64_t num_patches() const { return grid_rows() * grid_cols(); }
  [[nodiscard]] std::int64_t patch_dim() const { return channels * patch * patch; }
  [[nodiscard]] std::int64_t pixels() const { return channels * height * width; }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

enum class ImageRole { cover, residual, stego };

std::string_view to_string(ImageRole role);

/// C×H×W image in planar, row-major order. Cover and stego images live in
/// [0,1]; residuals are unconstrained.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::int64_t channels, std::int64_t height, std::int64_t width, ImageRole role = ImageRole::cover,
              double fill = 0.0);
  ImageTensor(std::int64_t channels, std::int64_t height, std::int64_t width, std::vector<double> values,
              ImageRole role = ImageRole::cover);

  [[nodiscard]] std::int64_t channels() const { return c_; }
  [[nodiscard]] std::int64_t height() const { return h_; }
  [[nodiscard]] std::int64_t width() const { return w_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] ImageRole role() const { return role_; }
  void set_role(ImageRole role) { role_ = role; }

  [[nodiscard]] double& at(std::int64_t c, std::int64_t y, std::int64_t x) {
    return data_[static_cast<std::size_t>((c * h_ + y) * w_ + x)];
  }
  [[nodiscard]] double at(std::int64_t c, std::int64_t y, std::int64_t x) const {
    return data_[static_cast<std::size_t>((c * h_ + y) * w_ + x)];
  }
  [[nodiscard]] std::span<double> values() { return data_; }
  [[nodiscard]] std::span<const double> values() const { return data_; }

  [[nodiscard]] bool same_shape(const ImageTensor& other) const {
    return c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
  }
  [[nodiscard]] bool in_unit_range() const;

  friend bool operator==(const ImageTensor& a, const ImageTensor& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  std::int64_t c_ = 0;
  std::int64_t h_ = 0;
  std::int64_t w_ = 0;
  ImageRole role_ = ImageRole::cover;
  std::vector<double> data_;
};

/// N×d_patch matrix in row-major order plus the geometry it came from.
struct PatchGrid {
  Geometry geometry;
  std::vector<double> values;

  [[nodiscard]] double& at(std::int64_t patch, std::int64_t k) {
    return values[static_cast<std::size_t>(patch * geometry.patch_dim() + k)];
  }
  [[nodiscard]] double at(std::int64_t patch, std::int64_t k) const {
    return values[static_cast<std::size_t>(patch * geometry.patch_dim() + k)];
  }
  static PatchGrid zeros(const Geometry& g);
};

/// Patch k = r·(W/P)+c covers rows [rP,(r+1)P) and cols [cP,(c+1)P); inside a
/// patch, element index is ch·P·P + i·P + j.
ImageTensor reshape_to_image(const PatchGrid& patches);

/// Exact inverse of reshape_to_image.
PatchGrid patchify(const ImageTensor& image, std::int64_t patch_size);

enum class ClampPolicy { none, hard };

/// stego = cover + residual, optionally clipped to [0,1].
ImageTensor insert(const ImageTensor& cover, const ImageTensor& residual, ClampPolicy clamp);

/// round(x·(2^bits−1))/(2^bits−1) elementwise. Entries must lie in [0,1].
ImageTensor quantize(const ImageTensor& image, int bits = 8);

}  // namespace semstego::stegocore
