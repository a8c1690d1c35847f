#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "uavinspect/error.hpp"
#include "uavinspect/imaging.hpp"

namespace uavinspect {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Reads the next header token of a PNM file, skipping whitespace and comments.
std::string next_pnm_token(const std::vector<char>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    token.push_back(bytes[pos++]);
  }
  return token;
}

RasterImage load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  const std::string magic = next_pnm_token(bytes, pos);
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else fail(ErrorCode::ParseError, path.string() + ": only binary P5/P6 files are supported");

  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_pnm_token(bytes, pos));
    height = std::stoi(next_pnm_token(bytes, pos));
    maxval = std::stoi(next_pnm_token(bytes, pos));
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, path.string() + ": malformed PNM header");
  }
  if (width < 1 || height < 1 || maxval != 255) {
    fail(ErrorCode::ParseError, path.string() + ": unsupported PNM geometry or maxval");
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < pos + n) fail(ErrorCode::ParseError, path.string() + ": truncated pixel data");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return RasterImage(width, height, channels, std::move(data));
}

void save_pnm(const RasterImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << (image.channels() == 1 ? "P5" : "P6") << '\n'
      << image.width() << ' ' << image.height() << "\n255\n";
  auto data = image.data();
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

RasterImage load_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    fail(ErrorCode::IoError, path.string() + ": " + png.message);
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, data.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    fail(ErrorCode::ParseError, path.string() + ": " + message);
  }
  return RasterImage(static_cast<int>(png.width), static_cast<int>(png.height), channels,
                     std::move(data));
}

void save_png(const RasterImage& image, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data().data(), 0, nullptr)) {
    fail(ErrorCode::IoError, path.string() + ": " + png.message);
  }
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::IoError, "no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  return load_png(path);
}

void save_image(const RasterImage& image, const std::filesystem::path& path) {
  require(!image.empty(), ErrorCode::InvalidParameter, "cannot save an empty image");
  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    save_pnm(image, path);
  } else {
    save_png(image, path);
  }
}

}  // namespace uavinspect
