#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nastaliq/corpus.hpp"
#include "nastaliq/net.hpp"

namespace nastaliq {

struct CtcLoss {
  double neg_log_prob = 0.0;
  Matrix logit_gradient;  // T x K, derivative w.r.t. pre-softmax logits
};

// Fewest frames that can emit `target`: one per label plus a separating blank
// between equal neighbours.
std::size_t ctc_min_frames(const LabelSequence& target);

// Throws ErrorKind::data when the target cannot be aligned to the frames.
CtcLoss ctc_loss(const PosteriorSequence& posteriors, const LabelSequence& target);

struct DecodeResult {
  LabelSequence labels;
  std::vector<Label> trace;  // per-step argmax
};

// Per-step argmax (lowest index wins ties), collapse repeats, drop blanks.
DecodeResult best_path_decode(const PosteriorSequence& posteriors);
LabelSequence collapse_path(std::span<const Label> path);

std::size_t edit_distance(std::span<const Label> a, std::span<const Label> b);

struct DecodedPair {
  LabelSequence decoded;
  LabelSequence target;
};

// Sum of edit distances over sum of target lengths.
double label_error_rate(std::span<const DecodedPair> pairs);

}  // namespace nastaliq
