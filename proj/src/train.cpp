#include "nastaliq/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>

#include "nastaliq/error.hpp"
#include "nastaliq/parallel.hpp"
#include "nastaliq/rng.hpp"

namespace nastaliq {
namespace {

std::atomic<bool> g_cancel{false};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool feasible(const Sample& s) {
  return s.inputs.rows() > 0 && static_cast<std::size_t>(s.inputs.rows()) >= ctc_min_frames(s.target);
}

struct StepOutcome {
  double loss = 0.0;
  LabelSequence decoded;
};

StepOutcome forward_backward(const BlstmModel& model, const Sample& s, BlstmModel& grad) {
  const BlstmForward fwd = blstm_forward(model, s.inputs);
  const CtcLoss loss = ctc_loss(fwd.posteriors, s.target);
  blstm_backward_accumulate(model, fwd, loss.logit_gradient, grad);
  return {loss.neg_log_prob, best_path_decode(fwd.posteriors).labels};
}

void add_into(BlstmModel& acc, const BlstmModel& g) {
  auto a = acc.tensors();
  auto b = g.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].size(); ++i) a[t][i] += b[t][i];
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

MomentumSgd::MomentumSgd(const BlstmModel& shape, double lr, double momentum, double clip)
    : velocity_(shape), lr_(lr), momentum_(momentum), clip_(clip) {
  if (!(lr >= 0.0) || !(momentum >= 0.0 && momentum < 1.0) || !(clip > 0.0)) {
    throw_usage("optimizer needs lr >= 0, momentum in [0, 1) and clip > 0");
  }
  velocity_.set_zero();
}

void MomentumSgd::step(BlstmModel& model, const BlstmModel& grad) {
  auto params = model.tensors();
  auto grads = grad.tensors();
  auto vel = velocity_.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = std::clamp(grads[t][i], -clip_, clip_);
      vel[t][i] = momentum_ * vel[t][i] - lr_ * g;
      params[t][i] += vel[t][i];
    }
  }
}

void request_cancel() noexcept { g_cancel.store(true); }
void reset_cancel() noexcept { g_cancel.store(false); }
bool cancel_requested() noexcept { return g_cancel.load(); }

void TrainConfig::validate() const {
  if (hidden_size < 1) throw_usage("hidden size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw_usage("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw_usage("momentum must be in [0, 1)");
  if (max_epochs < 1) throw_usage("max epochs must be >= 1");
  if (patience < 1) throw_usage("patience must be >= 1");
  if (!(gradient_clip > 0.0)) throw_usage("gradient clip must be > 0");
  if (batch_size < 1) throw_usage("batch size must be >= 1");
}

Dataset load_split(const Manifest& manifest, Split split, const Alphabet& alphabet, FrameDirection direction,
                   int threads) {
  const auto records = manifest.select(split);
  Dataset out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    const ManifestRecord& r = *records[i];
    Sample& s = out[i];
    s.id = r.id;
    LineImage line = normalize_height(load_image(r.image));
    s.inputs = frames_to_matrix(extract_frames(line, direction));
    try {
      s.target = encode_transcription(read_transcription(r.ground_truth), alphabet);
    } catch (const Error& e) {
      throw Error(e.kind(), r.id.render() + ": " + e.what());
    }
  });
  return out;
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, const Alphabet& alphabet,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw_data("empty split: train");
  if (val_set.empty()) throw_data("empty split: val");

  TrainResult result;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (feasible(train_set[i])) {
      usable.push_back(i);
    } else {
      result.skipped_ids.push_back(train_set[i].id);
    }
  }
  result.processed = usable.size();
  result.skipped = result.skipped_ids.size();
  if (usable.empty()) throw_data("no feasible training samples");

  BlstmModel model = init_model(kXHeight, cfg.hidden_size, alphabet.size(), cfg.seed);
  model.alphabet_fingerprint = alphabet.fingerprint();
  MomentumSgd optimizer(model, cfg.learning_rate, cfg.momentum, cfg.gradient_clip);

  const std::size_t batch = std::min(cfg.batch_size, usable.size());
  std::vector<BlstmModel> grads(batch, model);
  std::vector<StepOutcome> outcomes(batch);

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  const auto run_start = Clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (cancel_requested()) throw_data("interrupted");
    const auto epoch_start = Clock::now();
    std::vector<std::size_t> order = usable;
    Rng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    std::vector<DecodedPair> decoded;
    decoded.reserve(order.size());

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      parallel_for(n, cfg.threads, [&](std::size_t k) {
        grads[k].set_zero();
        outcomes[k] = forward_backward(model, train_set[order[start + k]], grads[k]);
      });
      // Fixed summation order regardless of thread scheduling.
      for (std::size_t k = 1; k < n; ++k) add_into(grads[0], grads[k]);
      optimizer.step(model, grads[0]);
      for (std::size_t k = 0; k < n; ++k) {
        const Sample& s = train_set[order[start + k]];
        loss_sum += outcomes[k].loss;
        token_sum += s.target.size();
        decoded.push_back({std::move(outcomes[k].decoded), s.target});
      }
    }
    if (!model.all_finite()) throw_internal("non-finite parameters after epoch " + std::to_string(epoch));

    EpochMetrics m;
    m.epoch = epoch;
    m.train_ctc_loss = loss_sum / static_cast<double>(token_sum);
    m.train_label_error = label_error_rate(decoded);
    m.val_label_error = evaluate(model, val_set, cfg.threads).label_error_rate;
    m.wall_seconds = seconds_since(epoch_start);
    result.history.push_back(m);

    if (m.val_label_error < best_val) {
      best_val = m.val_label_error;
      result.best = model;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (on_epoch) on_epoch(m);
    if (stale >= cfg.patience) {
      result.early_stopped = epoch < cfg.max_epochs;
      break;
    }
  }
  result.best_val_label_error = best_val;
  result.train_seconds = seconds_since(run_start);
  return result;
}

TrainResult train(const Manifest& manifest, const Alphabet& alphabet, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const Dataset train_set = load_split(manifest, Split::train, alphabet, cfg.direction, cfg.threads);
  const Dataset val_set = load_split(manifest, Split::val, alphabet, cfg.direction, cfg.threads);
  return train(train_set, val_set, alphabet, cfg, on_epoch);
}

EvalResult evaluate(const BlstmModel& model, const Dataset& samples, int threads) {
  if (samples.empty()) throw_data("empty split");
  EvalResult out;
  out.samples.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const BlstmForward fwd = blstm_forward(model, samples[i].inputs);
    SampleDecode& d = out.samples[i];
    d.id = samples[i].id;
    d.decoded = best_path_decode(fwd.posteriors).labels;
    d.target = samples[i].target;
    d.distance = edit_distance(d.decoded, d.target);
  });
  std::size_t errors = 0;
  std::size_t total = 0;
  for (const auto& d : out.samples) {
    errors += d.distance;
    total += d.target.size();
  }
  if (total == 0) throw_data("label error rate of an empty target set");
  out.label_error_rate = static_cast<double>(errors) / static_cast<double>(total);
  return out;
}

EvalResult evaluate(const BlstmModel& model, const Manifest& manifest, Split split, const Alphabet& alphabet,
                    FrameDirection direction, int threads) {
  if (model.alphabet_fingerprint != alphabet.fingerprint()) {
    throw_data("alphabet fingerprint mismatch: model was trained with a different alphabet");
  }
  if (model.alphabet_size() != alphabet.size()) throw_data("model output size does not match the alphabet");
  const Dataset samples = load_split(manifest, split, alphabet, direction, threads);
  if (samples.empty()) throw_data("empty split: " + std::string(split_name(split)));
  return evaluate(model, samples, threads);
}

void write_eval_tsv(const EvalResult& result, const Alphabet& alphabet, const std::filesystem::path& path) {
  std::string out = "sample_id\tdistance\ttarget_length\tdecoded\ttarget\n";
  for (const auto& s : result.samples) {
    out += s.id.render() + "\t" + std::to_string(s.distance) + "\t" + std::to_string(s.target.size()) + "\t" +
           join_tokens(decode_labels(s.decoded, alphabet)) + "\t" + join_tokens(decode_labels(s.target, alphabet)) +
           "\n";
  }
  write_text_file(path, out);
}

SweepResult sweep_hidden_sizes(const Manifest& manifest, const Alphabet& alphabet,
                               const std::vector<std::size_t>& sizes, const TrainConfig& base) {
  if (sizes.empty()) throw_usage("sweep needs at least one hidden size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw_usage("sweep hidden sizes must be strictly increasing");
  }
  base.validate();
  const Dataset train_set = load_split(manifest, Split::train, alphabet, base.direction, base.threads);
  const Dataset val_set = load_split(manifest, Split::val, alphabet, base.direction, base.threads);
  const Dataset test_set = load_split(manifest, Split::test, alphabet, base.direction, base.threads);
  if (test_set.empty()) throw_data("empty split: test");

  SweepResult rows;
  for (std::size_t h : sizes) {
    TrainConfig cfg = base;
    cfg.hidden_size = h;
    TrainResult r = train(train_set, val_set, alphabet, cfg);
    rows.push_back({h, r.best_val_label_error, evaluate(r.best, test_set, cfg.threads).label_error_rate,
                    r.train_seconds, r.history.size()});
  }
  return rows;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history, bool zero_wall_time) {
  std::string out = "epoch,train_ctc_loss,train_label_error,val_label_error,wall_seconds\n";
  for (const auto& m : history) {
    out += std::to_string(m.epoch) + "," + fmt(m.train_ctc_loss) + "," + fmt(m.train_label_error) + "," +
           fmt(m.val_label_error) + "," + fmt(zero_wall_time ? 0.0 : m.wall_seconds) + "\n";
  }
  return out;
}

std::string sweep_csv(const SweepResult& rows) {
  std::string out = "hidden_size,best_val_label_error,test_label_error,train_seconds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.hidden_size) + "," + fmt(r.best_val_label_error) + "," + fmt(r.test_label_error) + "," +
           fmt(r.train_seconds) + "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write " + path.string());
  out << text;
  if (!out) throw_data("cannot write " + path.string());
}

}  // namespace nastaliq
