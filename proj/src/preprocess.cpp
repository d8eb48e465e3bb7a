#include "nastaliq/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nastaliq/error.hpp"
#include "nastaliq/parallel.hpp"

namespace nastaliq {

void SkewSearchConfig::validate() const {
  if (!(fine_step > 0.0 && fine_step <= coarse_step && coarse_step <= max_angle)) {
    throw_usage("skew search needs 0 < fine_step <= coarse_step <= max_angle");
  }
  if (max_angle > 45.0) throw_usage("skew search max_angle must be <= 45 degrees");
}

GrayImage strip_color(const ColorImage& page, InkColor ink, double tolerance) {
  if (page.channels != 3) throw_data("strip_color needs a 3-channel image, got " + std::to_string(page.channels));
  std::vector<double> out(page.height * page.width, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = page.pixels[3 * i];
    const double g = page.pixels[3 * i + 1];
    const double b = page.pixels[3 * i + 2];
    if (ink == InkColor::red) {
      const double dominance = r - 0.5 * (g + b);
      if (dominance > tolerance) out[i] = std::clamp(1.0 - dominance, 0.0, 1.0);
    } else {
      // Anything with a dominant channel is colored baseline/noise.
      const double spread = std::max({r, g, b}) - std::min({r, g, b});
      if (spread <= tolerance) out[i] = luma(r, g, b);
    }
  }
  return GrayImage(page.height, page.width, std::move(out));
}

double skew_objective(const GrayImage& img, double degrees) {
  return skew_objective(img, degrees, otsu_threshold(img));
}

double skew_objective(const GrayImage& img, double degrees, double threshold) {
  return variance(horizontal_projection(binarize(rotate(img, degrees), threshold)));
}

namespace {

struct Candidate {
  double angle;
  double value;
};

// Total order: larger objective, then smaller |angle|, then negative first.
bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value > b.value;
  if (std::abs(a.angle) != std::abs(b.angle)) return std::abs(a.angle) < std::abs(b.angle);
  return a.angle < b.angle;
}

std::vector<Candidate> evaluate(const GrayImage& img, const std::vector<double>& angles, int threads) {
  std::vector<Candidate> out(angles.size());
  const double threshold = otsu_threshold(img);
  parallel_for(angles.size(), threads, [&](std::size_t i) {
    out[i] = {angles[i], skew_objective(img, angles[i], threshold)};
  });
  return out;
}

Candidate pick(const std::vector<Candidate>& cands) {
  Candidate best = cands.front();
  for (const auto& c : cands) {
    if (better(c, best)) best = c;
  }
  return best;
}

}  // namespace

SkewReport detect_skew(const GrayImage& img, const SkewSearchConfig& cfg, int threads) {
  cfg.validate();
  if (binarize(img).ink_count() == 0) throw_data("blank image");

  const auto coarse_n = static_cast<int>(std::floor(cfg.max_angle / cfg.coarse_step + 1e-9));
  std::vector<double> coarse;
  for (int k = -coarse_n; k <= coarse_n; ++k) coarse.push_back(k * cfg.coarse_step);
  const auto coarse_vals = evaluate(img, coarse, threads);
  const Candidate coarse_best = pick(coarse_vals);

  const auto fine_n = static_cast<int>(std::floor(cfg.coarse_step / cfg.fine_step + 1e-9));
  std::vector<double> fine;
  for (int j = -fine_n; j <= fine_n; ++j) {
    if (j == 0) continue;
    const double a = coarse_best.angle + j * cfg.fine_step;
    if (std::abs(a) <= cfg.max_angle + 1e-9) fine.push_back(a);
  }
  auto fine_vals = evaluate(img, fine, threads);
  fine_vals.push_back(coarse_best);
  const Candidate best = pick(fine_vals);

  return {best.angle, best.value, coarse.size() + fine.size()};
}

std::pair<GrayImage, SkewReport> deskew(const GrayImage& img, const SkewSearchConfig& cfg, int threads) {
  SkewReport report = detect_skew(img, cfg, threads);
  return {rotate(img, report.angle), report};
}

}  // namespace nastaliq
