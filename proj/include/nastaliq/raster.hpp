#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace nastaliq {

// Row-major grayscale raster. Intensities are in [0, 1] with 0 = ink (black)
// and 1 = background (white).
class GrayImage {
 public:
  GrayImage(std::size_t height, std::size_t width, double fill = 1.0);
  GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  double at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  double& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  std::span<const double> row(std::size_t r) const {
    return {pixels_.data() + r * width_, width_};
  }
  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> pixels_;
};

// Ink mask, 1 = ink.
class BinaryImage {
 public:
  BinaryImage(std::size_t height, std::size_t width);
  BinaryImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  std::size_t ink_count() const;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> pixels_;
};

// Interleaved RGB raster, channel values in [0, 1].
struct ColorImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<double> pixels;  // height * width * channels

  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * width + col) * channels + ch];
  }
};

// Per-row ink counts.
struct Projection {
  std::vector<std::int64_t> values;

  std::size_t size() const { return values.size(); }
  std::int64_t total() const;
};

// 0.299R + 0.587G + 0.114B, clamped to [0,1]; neutral input maps to itself.
inline double luma(double r, double g, double b) {
  const double v = (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0;
  return v < 0.0 ? 0.0 : v > 1.0 ? 1.0 : v;
}

// Reads P5/P6 netpbm (8-bit) or 8-bit gray / RGB PNG. Color input is reduced
// to luma 0.299R + 0.587G + 0.114B.
GrayImage load_image(const std::filesystem::path& path);

// Reads a raster keeping its channels (1 or 3) for color-keyed processing.
ColorImage load_color_image(const std::filesystem::path& path);

// Writes binary P5, intensity byte = round(255 * value).
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

// Writes binary P6, used by the synthetic generator for colored pages.
void save_ppm(const ColorImage& img, const std::filesystem::path& path);

GrayImage median_filter(const GrayImage& img, int radius = 1);

// Otsu threshold in intensity units; pixels strictly below it are ink.
// Returns 0 for images with a single intensity level.
double otsu_threshold(const GrayImage& img);

BinaryImage binarize(const GrayImage& img);
BinaryImage binarize(const GrayImage& img, double threshold);

Projection horizontal_projection(const BinaryImage& img);

// Rotation by `degrees` about the image center (positive = counter-clockwise
// on screen), bilinear sampling, out-of-canvas samples read as white. The
// canvas keeps its size, so corners may be clipped.
GrayImage rotate(const GrayImage& img, double degrees);

// Population variance of the projection values.
double variance(const Projection& p);

}  // namespace nastaliq
