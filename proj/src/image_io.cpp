#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "nastaliq/error.hpp"
#include "nastaliq/raster.hpp"

namespace nastaliq {
namespace {

struct RawRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> bytes;
  int maxval = 255;
};

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("unreadable file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Netpbm header token reader; skips whitespace and '#' comments.
class HeaderCursor {
 public:
  HeaderCursor(const std::vector<std::uint8_t>& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

  long next_number() {
    skip_space();
    if (pos_ >= data_.size() || !std::isdigit(data_[pos_])) fail();
    long v = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      v = v * 10 + (data_[pos_] - '0');
      if (v > (1L << 24)) fail();
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= data_.size() || !std::isspace(data_[pos_])) fail();
    return pos_ + 1;
  }

  [[noreturn]] void fail() const { throw_data("unreadable file: malformed netpbm header in " + path_.string()); }

 private:
  void skip_space() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(data_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& data_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 2;
};

RawRaster read_netpbm(const std::vector<std::uint8_t>& data, const std::filesystem::path& path) {
  RawRaster raw;
  raw.channels = data[1] == '5' ? 1 : 3;
  HeaderCursor cur(data, path);
  const long w = cur.next_number();
  const long h = cur.next_number();
  const long maxval = cur.next_number();
  const std::size_t start = cur.raster_start();
  if (w == 0 || h == 0) throw_data("zero-dimension image: " + path.string());
  if (maxval < 1 || maxval > 255) throw_data("unsupported format: netpbm maxval must be 1..255 in " + path.string());
  raw.width = static_cast<std::size_t>(w);
  raw.height = static_cast<std::size_t>(h);
  raw.maxval = static_cast<int>(maxval);
  const std::size_t need = raw.width * raw.height * raw.channels;
  if (data.size() - start < need) throw_data("unreadable file: truncated raster in " + path.string());
  raw.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(start),
                   data.begin() + static_cast<std::ptrdiff_t>(start + need));
  return raw;
}

RawRaster read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw_data("unreadable file: " + path.string() + ": " + image.message);
  }
  RawRaster raw;
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  raw.width = image.width;
  raw.height = image.height;
  raw.channels = color ? 3 : 1;
  if (raw.width == 0 || raw.height == 0) {
    png_image_free(&image);
    throw_data("zero-dimension image: " + path.string());
  }
  raw.bytes.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw_data("unreadable file: " + path.string() + ": " + msg);
  }
  return raw;
}

RawRaster read_raster(const std::filesystem::path& path) {
  auto data = read_all(path);
  if (data.size() >= 2 && data[0] == 'P' && (data[1] == '5' || data[1] == '6')) {
    return read_netpbm(data, path);
  }
  static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (data.size() >= 8 && std::equal(std::begin(png_sig), std::end(png_sig), data.begin())) {
    return read_png(path);
  }
  if (data.size() < 2) throw_data("unreadable file: " + path.string());
  throw_data("unsupported format: " + path.string());
}

}  // namespace

ColorImage load_color_image(const std::filesystem::path& path) {
  RawRaster raw = read_raster(path);
  ColorImage img;
  img.height = raw.height;
  img.width = raw.width;
  img.channels = raw.channels;
  img.pixels.resize(raw.bytes.size());
  const double scale = 1.0 / raw.maxval;
  for (std::size_t i = 0; i < raw.bytes.size(); ++i) img.pixels[i] = std::min(1.0, raw.bytes[i] * scale);
  return img;
}

GrayImage load_image(const std::filesystem::path& path) {
  ColorImage c = load_color_image(path);
  if (c.channels == 1) return GrayImage(c.height, c.width, std::move(c.pixels));
  std::vector<double> luma(c.height * c.width);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    const double* px = &c.pixels[i * 3];
    luma[i] = nastaliq::luma(px[0], px[1], px[2]);
  }
  return GrayImage(c.height, c.width, std::move(luma));
}

namespace {

void write_netpbm(const std::filesystem::path& path, char kind, std::size_t h, std::size_t w,
                  std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write " + path.string());
  out << 'P' << kind << '\n' << w << ' ' << h << "\n255\n";
  std::vector<char> bytes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    bytes[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_data("cannot write " + path.string());
}

}  // namespace

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  write_netpbm(path, '5', img.height(), img.width(), img.pixels());
}

void save_ppm(const ColorImage& img, const std::filesystem::path& path) {
  if (img.channels != 3) throw_usage("save_ppm needs a 3-channel image");
  write_netpbm(path, '6', img.height, img.width, img.pixels);
}

}  // namespace nastaliq
