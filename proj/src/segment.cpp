#include "nastaliq/segment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nastaliq/error.hpp"

namespace nastaliq {

FrameSequence::FrameSequence(std::size_t length, std::vector<double> values)
    : length_(length), values_(std::move(values)) {
  if (values_.size() != length_ * kXHeight) throw_internal("frame buffer size does not match length");
}

FrameSequence FrameSequence::reversed() const {
  std::vector<double> out(values_.size());
  for (std::size_t k = 0; k < length_; ++k) {
    auto src = frame(length_ - 1 - k);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(k * kXHeight));
  }
  return FrameSequence(length_, std::move(out));
}

std::vector<LineBand> segment_lines(const Projection& projection, std::int64_t ink_threshold,
                                    std::size_t min_line_height) {
  std::vector<LineBand> bands;
  const auto& hp = projection.values;
  std::size_t j = 0;
  while (j < hp.size()) {
    if (hp[j] > ink_threshold) {
      LineBand band{j, 0, 0};
      while (j < hp.size() && hp[j] > ink_threshold) {
        band.ink_pixels += hp[j];
        ++band.height;
        ++j;
      }
      if (band.height >= min_line_height) bands.push_back(band);
    }
    ++j;
  }
  return bands;
}

std::vector<LineBand> segment_lines(const GrayImage& page, std::int64_t ink_threshold,
                                    std::size_t min_line_height) {
  return segment_lines(horizontal_projection(binarize(page)), ink_threshold, min_line_height);
}

GrayImage crop_band(const GrayImage& page, const LineBand& band) {
  if (band.height == 0 || band.top + band.height > page.height()) {
    throw_data("band (" + std::to_string(band.top) + "," + std::to_string(band.height) +
               ") out of bounds for page of height " + std::to_string(page.height()));
  }
  auto px = page.pixels();
  const auto first = px.begin() + static_cast<std::ptrdiff_t>(band.top * page.width());
  std::vector<double> rows(first, first + static_cast<std::ptrdiff_t>(band.height * page.width()));
  return GrayImage(band.height, page.width(), std::move(rows));
}

namespace {

// Pixel-center aligned sample position in the source for destination index d.
double source_coord(std::size_t d, double scale) { return (static_cast<double>(d) + 0.5) * scale - 0.5; }

}  // namespace

LineImage normalize_height(const GrayImage& line) {
  const double factor = static_cast<double>(kXHeight) / static_cast<double>(line.height());
  const auto out_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(line.width() * factor)));
  if (line.height() == kXHeight && out_w == line.width()) return {line, {}, {}};

  const double sy = static_cast<double>(line.height()) / kXHeight;
  const double sx = static_cast<double>(line.width()) / static_cast<double>(out_w);
  const auto max_r = static_cast<double>(line.height() - 1);
  const auto max_c = static_cast<double>(line.width() - 1);

  GrayImage out(kXHeight, out_w);
  for (std::size_t y = 0; y < kXHeight; ++y) {
    const double fy = std::clamp(source_coord(y, sy), 0.0, max_r);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, line.height() - 1);
    const double ay = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp(source_coord(x, sx), 0.0, max_c);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, line.width() - 1);
      const double ax = fx - static_cast<double>(x0);
      const double v = (1 - ay) * ((1 - ax) * line.at(y0, x0) + ax * line.at(y0, x1)) +
                       ay * ((1 - ax) * line.at(y1, x0) + ax * line.at(y1, x1));
      out.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return {std::move(out), {}, {}};
}

FrameSequence extract_frames(const GrayImage& normalized, FrameDirection direction) {
  if (normalized.height() != kXHeight) {
    throw_data("frames need a " + std::to_string(kXHeight) + "-row line image, got " +
               std::to_string(normalized.height()));
  }
  const std::size_t t_len = normalized.width();
  std::vector<double> values(t_len * kXHeight);
  for (std::size_t k = 0; k < t_len; ++k) {
    const std::size_t col = direction == FrameDirection::left_to_right ? k : t_len - 1 - k;
    for (std::size_t r = 0; r < kXHeight; ++r) values[k * kXHeight + r] = normalized.at(r, col);
  }
  return FrameSequence(t_len, std::move(values));
}

FrameSequence extract_frames(const LineImage& line, FrameDirection direction) {
  return extract_frames(line.pixels, direction);
}

}  // namespace nastaliq
