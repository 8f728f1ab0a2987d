#include "semstego/data/covers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "semstego/common/errors.hpp"
#include "semstego/stegocore/image_io.hpp"

namespace semstego::data {

namespace fs = std::filesystem;
using stegocore::ImageTensor;

namespace {

ImageTensor to_channels(const ImageTensor& img, std::int64_t channels) {
  if (img.channels() == channels) return img;
  if (img.channels() == 1 && channels == 3) {
    ImageTensor out(3, img.height(), img.width(), img.role());
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t y = 0; y < img.height(); ++y)
        for (std::int64_t x = 0; x < img.width(); ++x) out.at(c, y, x) = img.at(0, y, x);
    return out;
  }
  if (img.channels() == 3 && channels == 1) {
    ImageTensor out(1, img.height(), img.width(), img.role());
    for (std::int64_t y = 0; y < img.height(); ++y)
      for (std::int64_t x = 0; x < img.width(); ++x)
        out.at(0, y, x) = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
    return out;
  }
  throw GeometryError("cannot convert " + std::to_string(img.channels()) + " channels to " + std::to_string(channels));
}

}  // namespace

std::vector<ImageTensor> load_covers(const fs::path& directory, std::int64_t height, std::int64_t width,
                                     std::size_t limit, std::int64_t channels, CoverLoadReport* report) {
  if (!fs::is_directory(directory)) throw PreconditionError("cover directory not found: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ImageTensor> out;
  for (const auto& f : files) {
    if (limit != 0 && out.size() >= limit) break;
    try {
      auto img = stegocore::read_any_image(f);
      out.push_back(to_channels(stegocore::center_crop_resize(img, height, width), channels));
      if (report != nullptr) report->loaded.push_back(f);
    } catch (const Error& e) {
      spdlog::warn("skipping cover {}: {}", f.string(), e.what());
      if (report != nullptr) report->skipped.push_back(f);
    }
  }
  return out;
}

ImageTensor synthetic_cover(std::int64_t channels, std::int64_t height, std::int64_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor img(channels, height, width);
  for (std::int64_t c = 0; c < channels; ++c) {
    double a[6];
    for (auto& v : a) v = u(rng);
    for (std::int64_t y = 0; y < height; ++y) {
      const double yy = height > 1 ? static_cast<double>(y) / static_cast<double>(height - 1) : 0.0;
      for (std::int64_t x = 0; x < width; ++x) {
        const double xx = width > 1 ? static_cast<double>(x) / static_cast<double>(width - 1) : 0.0;
        const double v = 0.3 + 0.4 * a[0] + 0.2 * (a[1] - 0.5) * xx + 0.2 * (a[2] - 0.5) * yy +
                         0.1 * std::sin(2.0 * std::numbers::pi * (3.0 * a[3] * xx + 3.0 * a[4] * yy) + 6.0 * a[5]);
        img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

std::vector<ImageTensor> synthetic_covers(std::size_t n, std::int64_t channels, std::int64_t height,
                                          std::int64_t width, std::uint64_t seed) {
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synthetic_cover(channels, height, width, seed * 7919 + i));
  return out;
}

}  // namespace semstego::data
