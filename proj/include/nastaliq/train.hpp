#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nastaliq/corpus.hpp"
#include "nastaliq/ctc.hpp"
#include "nastaliq/net.hpp"
#include "nastaliq/segment.hpp"

namespace nastaliq {

struct TrainConfig {
  std::size_t hidden_size = 100;
  double learning_rate = 3e-3;
  double momentum = 0.9;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  double gradient_clip = 1.0;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  bool reproducible = false;
  int threads = 1;
  FrameDirection direction = FrameDirection::right_to_left;

  void validate() const;
};

// One supervised line: network input frames and target labels.
struct Sample {
  SampleId id;
  Matrix inputs;  // T x kXHeight
  LabelSequence target;
};

using Dataset = std::vector<Sample>;

// Loads, height-normalizes and frames every record of `split`.
Dataset load_split(const Manifest& manifest, Split split, const Alphabet& alphabet,
                   FrameDirection direction = FrameDirection::right_to_left, int threads = 1);

// v <- momentum * v - lr * clip(g); theta <- theta + v, per component. A zero
// learning rate is allowed here and leaves parameters untouched.
class MomentumSgd {
 public:
  MomentumSgd(const BlstmModel& shape, double lr, double momentum, double clip);
  void step(BlstmModel& model, const BlstmModel& grad);

 private:
  BlstmModel velocity_;
  double lr_;
  double momentum_;
  double clip_;
};

struct EpochMetrics {
  std::size_t epoch = 0;           // 1-based
  double train_ctc_loss = 0.0;     // mean neg-log-prob per target token
  double train_label_error = 0.0;
  double val_label_error = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  BlstmModel best;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
  double best_val_label_error = 0.0;
  std::size_t processed = 0;  // per epoch
  std::size_t skipped = 0;    // infeasible samples, per epoch
  std::vector<SampleId> skipped_ids;
  bool early_stopped = false;
  double train_seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Online (or fixed-order mini-batch) momentum SGD with validation-based early
// stopping; returns the checkpoint with the lowest validation label error.
TrainResult train(const Dataset& train_set, const Dataset& val_set, const Alphabet& alphabet,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

TrainResult train(const Manifest& manifest, const Alphabet& alphabet, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct SampleDecode {
  SampleId id;
  LabelSequence decoded;
  LabelSequence target;
  std::size_t distance = 0;
};

struct EvalResult {
  double label_error_rate = 0.0;
  std::vector<SampleDecode> samples;
};

EvalResult evaluate(const BlstmModel& model, const Dataset& samples, int threads = 1);

EvalResult evaluate(const BlstmModel& model, const Manifest& manifest, Split split, const Alphabet& alphabet,
                    FrameDirection direction = FrameDirection::right_to_left, int threads = 1);

void write_eval_tsv(const EvalResult& result, const Alphabet& alphabet, const std::filesystem::path& path);

struct SweepRow {
  std::size_t hidden_size = 0;
  double best_val_label_error = 0.0;
  double test_label_error = 0.0;
  double train_seconds = 0.0;
  std::size_t epochs = 0;
};

using SweepResult = std::vector<SweepRow>;

SweepResult sweep_hidden_sizes(const Manifest& manifest, const Alphabet& alphabet,
                               const std::vector<std::size_t>& sizes, const TrainConfig& base);

// `epoch,train_ctc_loss,train_label_error,val_label_error,wall_seconds`.
// With `zero_wall_time` the timing column is written as 0 so that repeated
// runs produce identical bytes.
std::string metrics_csv(const std::vector<EpochMetrics>& history, bool zero_wall_time);
std::string sweep_csv(const SweepResult& rows);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Cooperative interruption, polled between epochs and pipeline stages.
void request_cancel() noexcept;
void reset_cancel() noexcept;
bool cancel_requested() noexcept;

}  // namespace nastaliq
