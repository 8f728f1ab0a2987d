#pragma once

#include <cstdint>
#include <filesystem>

#include "semstego/stegocore/image.hpp"

namespace semstego::stegocore {

/// Float carrier container: 32-byte little-endian header followed by the
/// planar C×H×W samples.
///
///   offset  size  field
///        0     8  magic "SSTGFLT1"
///        8     4  version (1)
///       12     4  channels
///       16     4  height
///       20     4  width
///       24     4  dtype tag (1 = float32, 2 = float64)
///       28     4  reserved (0)
enum class FloatDtype : std::uint32_t { float32 = 1, float64 = 2 };

void write_float_image(const std::filesystem::path& path, const ImageTensor& image,
                       FloatDtype dtype = FloatDtype::float64);
ImageTensor read_float_image(const std::filesystem::path& path);
bool is_float_container(const std::filesystem::path& path);

/// 8-bit PNG. Values are clamped to [0,1] and rounded to 0..255. One or three
/// channels (RGB channel order).
void write_png(const std::filesystem::path& path, const ImageTensor& image);

/// Decodes any image format OpenCV understands into [0,1] RGB (or gray for
/// single-channel files). Throws FormatError when undecodable.
ImageTensor read_image_file(const std::filesystem::path& path);

/// Float container or regular image file, chosen by content.
ImageTensor read_any_image(const std::filesystem::path& path);

/// Center-crops to the target aspect ratio, then area-resamples to H×W.
ImageTensor center_crop_resize(const ImageTensor& image, std::int64_t height, std::int64_t width);

}  // namespace semstego::stegocore
