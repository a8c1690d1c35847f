#include "uavinspect/imaging.hpp"

#include <cmath>
#include <string>

#include "uavinspect/error.hpp"

namespace uavinspect {

RasterImage::RasterImage(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  require(width >= 1 && height >= 1, ErrorCode::InvalidParameter, "image dimensions must be positive");
  require(channels == 1 || channels == 3, ErrorCode::InvalidChannelCount, "channels must be 1 or 3");
  data_.assign(pixel_count() * channels, fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  require(width >= 1 && height >= 1, ErrorCode::InvalidParameter, "image dimensions must be positive");
  require(channels == 1 || channels == 3, ErrorCode::InvalidChannelCount, "channels must be 1 or 3");
  if (data_.size() != pixel_count() * channels) {
    fail(ErrorCode::DimensionMismatch,
         "pixel buffer holds " + std::to_string(data_.size()) + " bytes, expected " +
             std::to_string(pixel_count() * channels));
  }
}

IntegralImage::IntegralImage(const RasterImage& gray)
    : width_(gray.width()), height_(gray.height()) {
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "integral image needs a 1-channel input");
  const std::size_t n = static_cast<std::size_t>(width_ + 1) * (height_ + 1);
  sums_.assign(n, 0);
  squares_.assign(n, 0);
  for (int y = 0; y < height_; ++y) {
    std::uint64_t row_sum = 0;
    std::uint64_t row_sq = 0;
    for (int x = 0; x < width_; ++x) {
      const std::uint64_t v = gray.at(x, y);
      row_sum += v;
      row_sq += v * v;
      sums_[index(x + 1, y + 1)] = sums_[index(x + 1, y)] + row_sum;
      squares_[index(x + 1, y + 1)] = squares_[index(x + 1, y)] + row_sq;
    }
  }
}

std::uint64_t IntegralImage::sum(int x0, int y0, int x1, int y1) const noexcept {
  return sums_[index(x1, y1)] + sums_[index(x0, y0)] - sums_[index(x1, y0)] - sums_[index(x0, y1)];
}

std::uint64_t IntegralImage::sum_squares(int x0, int y0, int x1, int y1) const noexcept {
  return squares_[index(x1, y1)] + squares_[index(x0, y0)] - squares_[index(x1, y0)] -
         squares_[index(x0, y1)];
}

RasterImage to_gray(const RasterImage& rgb) {
  require(rgb.channels() == 3, ErrorCode::InvalidChannelCount, "to_gray expects a 3-channel image");
  RasterImage out(rgb.width(), rgb.height(), 1);
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    const double v = std::round(luma);
    dst[i] = static_cast<std::uint8_t>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
  }
  return out;
}

RasterImage red_channel(const RasterImage& rgb) {
  require(rgb.channels() == 3, ErrorCode::InvalidChannelCount, "red_channel expects a 3-channel image");
  RasterImage out(rgb.width(), rgb.height(), 1);
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[3 * i];
  return out;
}

IntegralImage build_integral(const RasterImage& gray) { return IntegralImage(gray); }

RasterImage gray_to_rgb(const RasterImage& gray) {
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "gray_to_rgb expects a 1-channel image");
  RasterImage out(gray.width(), gray.height(), 3);
  auto src = gray.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  return out;
}

}  // namespace uavinspect
