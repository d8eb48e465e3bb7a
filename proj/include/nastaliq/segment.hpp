#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nastaliq/raster.hpp"

namespace nastaliq {

// Line images are normalized to this many rows; each frame is one column.
inline constexpr std::size_t kXHeight = 30;

struct LineBand {
  std::size_t top = 0;
  std::size_t height = 0;
  std::int64_t ink_pixels = 0;

  friend bool operator==(const LineBand&, const LineBand&) = default;
};

struct LineImage {
  GrayImage pixels;  // exactly kXHeight rows
  std::string page_id;
  LineBand band;
};

enum class FrameDirection { right_to_left, left_to_right };

// T frames of kXHeight intensities, stored frame-major.
class FrameSequence {
 public:
  FrameSequence() = default;
  FrameSequence(std::size_t length, std::vector<double> values);

  std::size_t length() const { return length_; }
  std::span<const double> frame(std::size_t k) const {
    return {values_.data() + k * kXHeight, kXHeight};
  }
  std::span<const double> values() const { return values_; }

  FrameSequence reversed() const;

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;

 private:
  std::size_t length_ = 0;
  std::vector<double> values_;
};

// Scans the projection top to bottom: a band opens on a row whose count
// exceeds `ink_threshold` and closes on the first row at or below it. Bands
// shorter than `min_line_height` are dropped.
std::vector<LineBand> segment_lines(const Projection& projection, std::int64_t ink_threshold = 0,
                                    std::size_t min_line_height = 5);

std::vector<LineBand> segment_lines(const GrayImage& page, std::int64_t ink_threshold = 0,
                                    std::size_t min_line_height = 5);

GrayImage crop_band(const GrayImage& page, const LineBand& band);

// Bilinear resample to kXHeight rows, width scaled by the same factor.
LineImage normalize_height(const GrayImage& line);

FrameSequence extract_frames(const LineImage& line, FrameDirection direction = FrameDirection::right_to_left);
FrameSequence extract_frames(const GrayImage& normalized, FrameDirection direction = FrameDirection::right_to_left);

}  // namespace nastaliq
