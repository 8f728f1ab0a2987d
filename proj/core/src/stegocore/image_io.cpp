#include "semstego/stegocore/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace semstego::stegocore {

static_assert(std::endian::native == std::endian::little, "float container I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'S', 'T', 'G', 'F', 'L', 'T', '1'};

struct Header {
  std::array<char, 8> magic;
  std::uint32_t version;
  std::uint32_t channels;
  std::uint32_t height;
  std::uint32_t width;
  std::uint32_t dtype;
  std::uint32_t reserved;
};
static_assert(sizeof(Header) == 32);

cv::Mat to_mat(const ImageTensor& image) {
  const int type = image.channels() == 1 ? CV_64FC1 : CV_64FC3;
  cv::Mat mat(static_cast<int>(image.height()), static_cast<int>(image.width()), type);
  for (std::int64_t y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<double>(static_cast<int>(y));
    for (std::int64_t x = 0; x < image.width(); ++x) {
      for (std::int64_t c = 0; c < image.channels(); ++c) row[x * image.channels() + c] = image.at(c, y, x);
    }
  }
  return mat;
}

ImageTensor from_mat(const cv::Mat& mat64) {
  const auto channels = mat64.channels();
  ImageTensor img(channels, mat64.rows, mat64.cols, ImageRole::cover);
  for (int y = 0; y < mat64.rows; ++y) {
    const auto* row = mat64.ptr<double>(y);
    for (int x = 0; x < mat64.cols; ++x) {
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = row[x * channels + c];
    }
  }
  return img;
}

}  // namespace

void write_float_image(const std::filesystem::path& path, const ImageTensor& image, FloatDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  Header h{kMagic, 1, static_cast<std::uint32_t>(image.channels()), static_cast<std::uint32_t>(image.height()),
           static_cast<std::uint32_t>(image.width()), static_cast<std::uint32_t>(dtype), 0};
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  if (dtype == FloatDtype::float64) {
    out.write(reinterpret_cast<const char*>(image.values().data()),
              static_cast<std::streamsize>(image.size() * sizeof(double)));
  } else {
    std::vector<float> buf(image.values().begin(), image.values().end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw FormatError("short write to " + path.string());
}

bool is_float_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  return in && magic == kMagic;
}

ImageTensor read_float_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Header h{};
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || h.magic != kMagic) throw FormatError(path.string() + " is not a float image container");
  if (h.version != 1) throw FormatError("unsupported float container version " + std::to_string(h.version));
  const auto n = static_cast<std::size_t>(h.channels) * h.height * h.width;
  if (n == 0) throw FormatError("float container with empty image");
  std::vector<double> values(n);
  if (h.dtype == static_cast<std::uint32_t>(FloatDtype::float64)) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
  } else if (h.dtype == static_cast<std::uint32_t>(FloatDtype::float32)) {
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    std::copy(buf.begin(), buf.end(), values.begin());
  } else {
    throw FormatError("unknown dtype tag in float container");
  }
  if (!in) throw FormatError("truncated float container " + path.string());
  return ImageTensor(h.channels, h.height, h.width, std::move(values), ImageRole::stego);
}

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) throw PreconditionError("PNG output needs 1 or 3 channels");
  const auto ch = static_cast<int>(image.channels());
  cv::Mat u8(static_cast<int>(image.height()), static_cast<int>(image.width()), CV_MAKETYPE(CV_8U, ch));
  for (int y = 0; y < u8.rows; ++y) {
    auto* row = u8.ptr<std::uint8_t>(y);
    for (int x = 0; x < u8.cols; ++x) {
      for (int c = 0; c < ch; ++c) {
        row[x * ch + c] = static_cast<std::uint8_t>(std::round(std::clamp(image.at(c, y, x), 0.0, 1.0) * 255.0));
      }
    }
  }
  if (image.channels() == 3) cv::cvtColor(u8, u8, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), u8)) throw FormatError("cannot write PNG " + path.string());
}

ImageTensor read_image_file(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw FormatError("cannot decode image " + path.string());
  if (raw.depth() != CV_8U && raw.depth() != CV_16U) throw FormatError("unsupported pixel depth in " + path.string());
  const double levels = raw.depth() == CV_16U ? 65535.0 : 255.0;
  cv::Mat rgb;
  switch (raw.channels()) {
    case 1:
      rgb = raw;
      break;
    case 3:
      cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw FormatError("unsupported channel count in " + path.string());
  }
  cv::Mat f64;
  rgb.convertTo(f64, CV_MAKETYPE(CV_64F, rgb.channels()));
  auto img = from_mat(f64);
  for (auto& v : img.values()) v /= levels;
  return img;
}

ImageTensor read_any_image(const std::filesystem::path& path) {
  if (is_float_container(path)) return read_float_image(path);
  auto img = read_image_file(path);
  img.set_role(ImageRole::stego);
  return img;
}

ImageTensor center_crop_resize(const ImageTensor& image, std::int64_t height, std::int64_t width) {
  if (height <= 0 || width <= 0) throw GeometryError("target size must be positive");
  cv::Mat m = to_mat(image);
  // Largest centered window with the target aspect ratio.
  const double target = static_cast<double>(width) / static_cast<double>(height);
  int cw = m.cols;
  int ch = m.rows;
  if (static_cast<double>(m.cols) / m.rows > target) {
    cw = static_cast<int>(std::lround(m.rows * target));
  } else {
    ch = static_cast<int>(std::lround(m.cols / target));
  }
  cv::Mat crop = m(cv::Rect((m.cols - cw) / 2, (m.rows - ch) / 2, cw, ch));
  cv::Mat out;
  if (crop.cols == width && crop.rows == height) {
    out = crop.clone();
  } else {
    const int interp = (crop.cols >= width && crop.rows >= height) ? cv::INTER_AREA : cv::INTER_LINEAR;
    cv::resize(crop, out, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0, interp);
  }
  auto img = from_mat(out);
  img.set_role(image.role());
  return img;
}

}  // namespace semstego::stegocore
