#pragma once

#include <cstddef>
#include <utility>

#include "nastaliq/raster.hpp"

namespace nastaliq {

enum class InkColor { red, black };

// Grid for the projection-variance skew search: a coarse pass over
// [-max_angle, +max_angle], then a fine pass over +-coarse_step around the
// coarse winner.
struct SkewSearchConfig {
  double max_angle = 15.0;
  double coarse_step = 1.0;
  double fine_step = 0.1;

  void validate() const;
};

struct SkewReport {
  double angle = 0.0;          // rotation that levels the page
  double best_variance = 0.0;
  std::size_t evaluated_angles = 0;
};

// Keeps pixels whose `ink` channel beats the mean of the other two channels by
// more than `tolerance` (red), or dark neutral pixels (black), as ink
// intensities; everything else becomes background.
GrayImage strip_color(const ColorImage& page, InkColor ink, double tolerance = 0.25);

// Objective maximized by the skew search: projection variance of the page
// rotated by `degrees`, binarized at the Otsu threshold of the unrotated page.
// Re-thresholding each rotation would let interpolation grays move the
// threshold, and the objective would follow stroke thickness.
double skew_objective(const GrayImage& img, double degrees);
double skew_objective(const GrayImage& img, double degrees, double threshold);

SkewReport detect_skew(const GrayImage& img, const SkewSearchConfig& cfg = {}, int threads = 1);

std::pair<GrayImage, SkewReport> deskew(const GrayImage& img, const SkewSearchConfig& cfg = {},
                                        int threads = 1);

}  // namespace nastaliq
