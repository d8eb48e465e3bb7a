#include "nastaliq/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nastaliq/error.hpp"

namespace nastaliq {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

std::size_t ctc_min_frames(const LabelSequence& target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

CtcLoss ctc_loss(const PosteriorSequence& posteriors, const LabelSequence& target) {
  const auto steps = static_cast<Eigen::Index>(posteriors.length());
  const auto classes = posteriors.classes();
  for (Label l : target) {
    if (l == kBlank || l >= classes) throw_data("target label " + std::to_string(l) + " outside [1, K-1]");
  }
  if (steps == 0 || posteriors.length() < ctc_min_frames(target)) {
    throw_data("infeasible target: " + std::to_string(target.size()) + " labels need at least " +
               std::to_string(ctc_min_frames(target)) + " frames, got " + std::to_string(steps));
  }

  // Extended target: blank, l1, blank, l2, ..., blank.
  const auto states = static_cast<Eigen::Index>(2 * target.size() + 1);
  std::vector<Label> ext(static_cast<std::size_t>(states), kBlank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto can_skip = [&](Eigen::Index s) {  // transition s-2 -> s
    return s >= 2 && ext[static_cast<std::size_t>(s)] != kBlank &&
           ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)];
  };

  const Matrix log_y = posteriors.probs.array().log().matrix();
  auto ly = [&](Eigen::Index t, Eigen::Index s) { return log_y(t, static_cast<Eigen::Index>(ext[static_cast<std::size_t>(s)])); };

  // alpha includes the emission at t; beta covers emissions after t only.
  Matrix alpha = Matrix::Constant(steps, states, kNegInf);
  Matrix beta = Matrix::Constant(steps, states, kNegInf);
  alpha(0, 0) = ly(0, 0);
  if (states > 1) alpha(0, 1) = ly(0, 1);
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (Eigen::Index s = 0; s < states; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
      if (can_skip(s)) acc = log_add(acc, alpha(t - 1, s - 2));
      alpha(t, s) = acc == kNegInf ? kNegInf : acc + ly(t, s);
    }
  }
  beta(steps - 1, states - 1) = 0.0;
  if (states > 1) beta(steps - 1, states - 2) = 0.0;
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < states; ++s) {
      double acc = beta(t + 1, s) + ly(t + 1, s);
      if (s + 1 < states) acc = log_add(acc, beta(t + 1, s + 1) + ly(t + 1, s + 1));
      if (s + 2 < states && can_skip(s + 2)) acc = log_add(acc, beta(t + 1, s + 2) + ly(t + 1, s + 2));
      beta(t, s) = acc;
    }
  }

  double log_p = alpha(steps - 1, states - 1);
  if (states > 1) log_p = log_add(log_p, alpha(steps - 1, states - 2));
  if (!std::isfinite(log_p)) throw_data("target has zero probability under the posteriors");

  CtcLoss out;
  out.neg_log_prob = std::max(0.0, -log_p);
  out.logit_gradient = posteriors.probs;
  std::vector<double> occupancy(classes);
  for (Eigen::Index t = 0; t < steps; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (Eigen::Index s = 0; s < states; ++s) {
      auto& o = occupancy[ext[static_cast<std::size_t>(s)]];
      o = log_add(o, alpha(t, s) + beta(t, s));
    }
    for (std::size_t k = 0; k < classes; ++k) {
      if (occupancy[k] != kNegInf) out.logit_gradient(t, static_cast<Eigen::Index>(k)) -= std::exp(occupancy[k] - log_p);
    }
  }
  return out;
}

LabelSequence collapse_path(std::span<const Label> path) {
  LabelSequence out;
  Label prev = kBlank;
  for (Label l : path) {
    if (l != kBlank && l != prev) out.push_back(l);
    prev = l;
  }
  return out;
}

DecodeResult best_path_decode(const PosteriorSequence& posteriors) {
  DecodeResult r;
  r.trace.reserve(posteriors.length());
  for (Eigen::Index t = 0; t < posteriors.probs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < posteriors.probs.cols(); ++k) {
      if (posteriors.probs(t, k) > posteriors.probs(t, best)) best = k;
    }
    r.trace.push_back(static_cast<Label>(best));
  }
  r.labels = collapse_path(r.trace);
  return r;
}

std::size_t edit_distance(std::span<const Label> a, std::span<const Label> b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double label_error_rate(std::span<const DecodedPair> pairs) {
  std::size_t errors = 0;
  std::size_t total = 0;
  for (const auto& p : pairs) {
    if (p.target.empty()) throw_data("label error rate needs non-empty targets");
    errors += edit_distance(p.decoded, p.target);
    total += p.target.size();
  }
  if (total == 0) throw_data("label error rate of an empty target set");
  return static_cast<double>(errors) / static_cast<double>(total);
}

}  // namespace nastaliq
