#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nastaliq/segment.hpp"

namespace nastaliq {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Gate blocks are stacked in this order inside W, R and b.
enum class Gate : std::size_t { input = 0, forget = 1, candidate = 2, output = 3 };

struct LstmLayerParams {
  LstmLayerParams() = default;
  LstmLayerParams(std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix W;  // 4H x input
  Matrix R;  // 4H x H
  Vector b;  // 4H

  auto gate_input_weights(Gate g) { return W.middleRows(static_cast<Eigen::Index>(g) * hidden(), hidden()); }
  auto gate_recurrent_weights(Gate g) { return R.middleRows(static_cast<Eigen::Index>(g) * hidden(), hidden()); }
  auto gate_bias(Gate g) { return b.segment(static_cast<Eigen::Index>(g) * hidden(), hidden()); }

 private:
  Eigen::Index hidden() const { return static_cast<Eigen::Index>(hidden_size); }
};

struct BlstmModel {
  BlstmModel() = default;
  BlstmModel(std::size_t input_size, std::size_t hidden_size, std::size_t alphabet_size);

  LstmLayerParams forward;
  LstmLayerParams backward;
  Matrix output_weights;  // K x 2H, columns [forward | backward]
  Vector output_bias;     // K
  std::uint64_t alphabet_fingerprint = 0;

  std::size_t input_size() const { return forward.input_size; }
  std::size_t hidden_size() const { return forward.hidden_size; }
  std::size_t alphabet_size() const { return static_cast<std::size_t>(output_bias.size()); }

  // All trainable tensors in checkpoint order.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;

  void set_zero();
  bool all_finite() const;
};

// Uniform [-0.1, 0.1] weights, zero biases except forget gates at 1.0.
BlstmModel init_model(std::size_t input_size, std::size_t hidden_size, std::size_t alphabet_size,
                      std::uint64_t seed);

struct LstmCache {
  Matrix gates;      // T x 4H activations: input, forget, candidate, output
  Matrix cell;       // T x H
  Matrix tanh_cell;  // T x H
  Matrix hidden;     // T x H
};

LstmCache lstm_forward(const LstmLayerParams& p, const Matrix& inputs);

// Accumulates parameter gradients into `grad` given dLoss/dhidden (T x H).
// Returns dLoss/dinputs (T x input).
Matrix lstm_backward(const LstmLayerParams& p, const Matrix& inputs, const LstmCache& cache,
                     const Matrix& hidden_grad, LstmLayerParams& grad);

// Per-step distributions over the alphabet (blank at column 0).
struct PosteriorSequence {
  Matrix probs;  // T x K

  std::size_t length() const { return static_cast<std::size_t>(probs.rows()); }
  std::size_t classes() const { return static_cast<std::size_t>(probs.cols()); }
};

struct BlstmForward {
  Matrix inputs;  // T x input
  LstmCache forward;
  LstmCache backward;  // in reversed time
  Matrix logits;       // T x K
  PosteriorSequence posteriors;
};

Matrix frames_to_matrix(const FrameSequence& frames);

BlstmForward blstm_forward(const BlstmModel& m, const Matrix& inputs);
BlstmForward blstm_forward(const BlstmModel& m, const FrameSequence& frames);

// Gradients of a loss whose derivative w.r.t. the logits is `logit_grad`
// (T x K). The result has the model's shapes.
BlstmModel blstm_backward(const BlstmModel& m, const BlstmForward& fwd, const Matrix& logit_grad);
void blstm_backward_accumulate(const BlstmModel& m, const BlstmForward& fwd, const Matrix& logit_grad,
                               BlstmModel& grad);

Matrix softmax_rows(const Matrix& logits);

// Checkpoint: "BLSTM1", u32 version, u32 input, u32 hidden, u32 K,
// u64 alphabet fingerprint, then every tensor of tensors() as little-endian
// f64, row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_model(const BlstmModel& m, const std::filesystem::path& path);
BlstmModel load_model(const std::filesystem::path& path,
                      std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

}  // namespace nastaliq
