#include "semstego/stegocore/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace semstego::stegocore {

void Geometry::validate() const {
  if (channels <= 0 || height <= 0 || width <= 0) throw GeometryError("image dimensions must be positive");
  if (patch <= 0) throw GeometryError("patch size must be positive");
  if (height % patch != 0 || width % patch != 0) {
    throw GeometryError("image " + std::to_string(height) + "x" + std::to_string(width) +
                        " is not divisible by patch size " + std::to_string(patch));
  }
}

std::string_view to_string(ImageRole role) {
  switch (role) {
    case ImageRole::cover:
      return "cover";
    case ImageRole::residual:
      return "residual";
    case ImageRole::stego:
      return "stego";
  }
  return "unknown";
}

ImageTensor::ImageTensor(std::int64_t channels, std::int64_t height, std::int64_t width, ImageRole role,
                         double fill)
    : c_(channels), h_(height), w_(width), role_(role) {
  if (channels <= 0 || height <= 0 || width <= 0) throw GeometryError("image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(channels * height * width), fill);
}

ImageTensor::ImageTensor(std::int64_t channels, std::int64_t height, std::int64_t width,
                         std::vector<double> values, ImageRole role)
    : c_(channels), h_(height), w_(width), role_(role), data_(std::move(values)) {
  if (channels <= 0 || height <= 0 || width <= 0) throw GeometryError("image dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(channels * height * width)) {
    throw GeometryError("image buffer does not match C×H×W");
  }
}

bool ImageTensor::in_unit_range() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

PatchGrid PatchGrid::zeros(const Geometry& g) {
  g.validate();
  return {g, std::vector<double>(static_cast<std::size_t>(g.num_patches() * g.patch_dim()), 0.0)};
}

ImageTensor reshape_to_image(const PatchGrid& patches) {
  const auto& g = patches.geometry;
  g.validate();
  if (patches.values.size() != static_cast<std::size_t>(g.num_patches() * g.patch_dim())) {
    throw GeometryError("patch grid size does not match its geometry");
  }
  ImageTensor img(g.channels, g.height, g.width, ImageRole::residual);
  const auto P = g.patch;
  for (std::int64_t k = 0; k < g.num_patches(); ++k) {
    const auto r = k / g.grid_cols();
    const auto c = k % g.grid_cols();
    for (std::int64_t ch = 0; ch < g.channels; ++ch) {
      for (std::int64_t i = 0; i < P; ++i) {
        for (std::int64_t j = 0; j < P; ++j) {
          img.at(ch, r * P + i, c * P + j) = patches.at(k, (ch * P + i) * P + j);
        }
      }
    }
  }
  return img;
}

PatchGrid patchify(const ImageTensor& image, std::int64_t patch_size) {
  Geometry g{image.channels(), image.height(), image.width(), patch_size};
  g.validate();
  auto grid = PatchGrid::zeros(g);
  const auto P = patch_size;
  for (std::int64_t k = 0; k < g.num_patches(); ++k) {
    const auto r = k / g.grid_cols();
    const auto c = k % g.grid_cols();
    for (std::int64_t ch = 0; ch < g.channels; ++ch) {
      for (std::int64_t i = 0; i < P; ++i) {
        for (std::int64_t j = 0; j < P; ++j) {
          grid.at(k, (ch * P + i) * P + j) = image.at(ch, r * P + i, c * P + j);
        }
      }
    }
  }
  return grid;
}

ImageTensor insert(const ImageTensor& cover, const ImageTensor& residual, ClampPolicy clamp) {
  if (!cover.same_shape(residual)) throw GeometryError("cover and residual shapes differ");
  ImageTensor stego = cover;
  stego.set_role(ImageRole::stego);
  auto out = stego.values();
  auto add = residual.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += add[i];
    if (clamp == ClampPolicy::hard) out[i] = std::clamp(out[i], 0.0, 1.0);
  }
  return stego;
}

ImageTensor quantize(const ImageTensor& image, int bits) {
  if (bits < 1 || bits > 16) throw PreconditionError("quantization bits must be in [1,16]");
  if (!image.in_unit_range()) throw PreconditionError("quantize expects entries in [0,1]; clamp first");
  const double levels = std::ldexp(1.0, bits) - 1.0;
  ImageTensor out = image;
  for (auto& v : out.values()) v = std::round(v * levels) / levels;
  return out;
}

}  // namespace semstego::stegocore
