#include "nastaliq/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "nastaliq/error.hpp"

namespace nastaliq {

GrayImage::GrayImage(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width) {
  if (height == 0 || width == 0) throw_data("zero-dimension image");
  if (!(fill >= 0.0 && fill <= 1.0)) throw_usage("fill intensity outside [0,1]");
  pixels_.assign(height * width, fill);
}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0) throw_data("zero-dimension image");
  if (pixels_.size() != height * width) throw_internal("pixel count does not match dimensions");
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw_data("intensity outside [0,1]");
  }
}

BinaryImage::BinaryImage(std::size_t height, std::size_t width)
    : height_(height), width_(width), pixels_(height * width, 0) {
  if (height == 0 || width == 0) throw_data("zero-dimension image");
}

BinaryImage::BinaryImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height == 0 || width == 0) throw_data("zero-dimension image");
  if (pixels_.size() != height * width) throw_internal("pixel count does not match dimensions");
  for (auto v : pixels_) {
    if (v > 1) throw_data("binary pixel outside {0,1}");
  }
}

std::size_t BinaryImage::ink_count() const {
  return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

std::int64_t Projection::total() const {
  return std::accumulate(values.begin(), values.end(), std::int64_t{0});
}

GrayImage median_filter(const GrayImage& img, int radius) {
  if (radius < 1) throw_usage("median radius must be >= 1, got " + std::to_string(radius));
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  GrayImage out(img.height(), img.width());
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      window.clear();
      for (std::ptrdiff_t dr = -radius; dr <= radius; ++dr) {
        const auto rr = std::clamp<std::ptrdiff_t>(r + dr, 0, h - 1);
        for (std::ptrdiff_t dc = -radius; dc <= radius; ++dc) {
          const auto cc = std::clamp<std::ptrdiff_t>(c + dc, 0, w - 1);
          window.push_back(img.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)));
        }
      }
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = *mid;
    }
  }
  return out;
}

double otsu_threshold(const GrayImage& img) {
  std::array<double, 256> hist{};
  for (double v : img.pixels()) hist[static_cast<std::size_t>(std::lround(v * 255.0))] += 1.0;

  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (std::size_t k = 0; k < 256; ++k) sum_all += static_cast<double>(k) * hist[k];

  // Between-class variance for the split {0..k} | {k+1..255}.
  std::array<double, 255> score{};
  double w0 = 0.0;
  double sum0 = 0.0;
  double best = 0.0;
  for (std::size_t k = 0; k < 255; ++k) {
    w0 += hist[k];
    sum0 += static_cast<double>(k) * hist[k];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    score[k] = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    best = std::max(best, score[k]);
  }
  if (best <= 0.0) return 0.0;  // single intensity level

  // Centre of the plateau of maximal scores, so that e.g. a two-level image
  // is split halfway between its levels.
  std::size_t first = 255;
  std::size_t last = 0;
  for (std::size_t k = 0; k < 255; ++k) {
    if (score[k] >= best * (1.0 - 1e-12)) {
      first = std::min(first, k);
      last = std::max(last, k);
    }
  }
  const double split_bin = 0.5 * static_cast<double>(first + last);
  return (split_bin + 0.5) / 255.0;
}

BinaryImage binarize(const GrayImage& img) { return binarize(img, otsu_threshold(img)); }

BinaryImage binarize(const GrayImage& img, double threshold) {
  std::vector<std::uint8_t> mask(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) mask[i] = px[i] < threshold ? 1 : 0;
  return BinaryImage(img.height(), img.width(), std::move(mask));
}

Projection horizontal_projection(const BinaryImage& img) {
  Projection p;
  p.values.resize(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) {
    std::int64_t n = 0;
    for (std::size_t c = 0; c < img.width(); ++c) n += img.at(r, c);
    p.values[r] = n;
  }
  return p;
}

namespace {

// Exact values at multiples of 90 degrees keep quarter turns lossless.
std::pair<double, double> cos_sin_degrees(double degrees) {
  const double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    static constexpr std::array<std::pair<double, double>, 4> table{
        {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};
    auto q = static_cast<long long>(std::round(quarter)) % 4;
    if (q < 0) q += 4;
    return table[static_cast<std::size_t>(q)];
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

}  // namespace

GrayImage rotate(const GrayImage& img, double degrees) {
  if (!std::isfinite(degrees)) throw_usage("rotation angle must be finite");
  if (degrees == 0.0) return img;

  const auto [cs, sn] = cos_sin_degrees(degrees);
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const double cx = 0.5 * static_cast<double>(w - 1);
  const double cy = 0.5 * static_cast<double>(h - 1);

  auto sample = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    if (r < 0 || c < 0 || r >= h || c >= w) return 1.0;
    return img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };

  GrayImage out(img.height(), img.width());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    const double dy = static_cast<double>(y) - cy;
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      // Inverse mapping: where in the source does this output pixel come from.
      const double sx = cx + dx * cs - dy * sn;
      const double sy = cy + dx * sn + dy * cs;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double ax = sx - fx0;
      const double ay = sy - fy0;
      const auto x0 = static_cast<std::ptrdiff_t>(fx0);
      const auto y0 = static_cast<std::ptrdiff_t>(fy0);
      double v = (1.0 - ay) * ((1.0 - ax) * sample(y0, x0) + ax * sample(y0, x0 + 1)) +
                 ay * ((1.0 - ax) * sample(y0 + 1, x0) + ax * sample(y0 + 1, x0 + 1));
      out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

double variance(const Projection& p) {
  if (p.values.empty()) throw_usage("variance of an empty projection");
  const double n = static_cast<double>(p.values.size());
  double mean = 0.0;
  for (auto v : p.values) mean += static_cast<double>(v);
  mean /= n;
  double acc = 0.0;
  for (auto v : p.values) {
    const double d = static_cast<double>(v) - mean;
    acc += d * d;
  }
  return acc / n;
}

}  // namespace nastaliq
