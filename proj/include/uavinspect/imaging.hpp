#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace uavinspect {

// 8-bit raster, row-major, channels interleaved (RGB when channels == 3).
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, std::uint8_t fill = 0);
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::uint8_t at(int x, int y, int c = 0) const noexcept { return data_[offset(x, y) + c]; }
  std::uint8_t& at(int x, int y, int c = 0) noexcept { return data_[offset(x, y) + c]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  bool operator==(const RasterImage&) const = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Summed-area tables over a 1-channel image. Entries are exact 64-bit sums, so
// window queries reproduce naive summation bit for bit.
class IntegralImage {
 public:
  explicit IntegralImage(const RasterImage& gray);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  // Half-open window [x0, x1) x [y0, y1); bounds must lie inside the image.
  std::uint64_t sum(int x0, int y0, int x1, int y1) const noexcept;
  std::uint64_t sum_squares(int x0, int y0, int x1, int y1) const noexcept;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * (width_ + 1) + x;
  }

  int width_;
  int height_;
  std::vector<std::uint64_t> sums_;
  std::vector<std::uint64_t> squares_;
};

RasterImage to_gray(const RasterImage& rgb);
RasterImage red_channel(const RasterImage& rgb);
IntegralImage build_integral(const RasterImage& gray);

// Replicates a 1-channel image into three identical channels.
RasterImage gray_to_rgb(const RasterImage& gray);

// PNG, binary PGM (P5) and binary PPM (P6) are read; writes are PNG unless the
// extension is .pgm/.ppm.
RasterImage load_image(const std::filesystem::path& path);
void save_image(const RasterImage& image, const std::filesystem::path& path);

}  // namespace uavinspect
