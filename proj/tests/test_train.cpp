#include <gtest/gtest.h>

#include <algorithm>

#include "nastaliq/error.hpp"
#include "nastaliq/synth.hpp"
#include "nastaliq/train.hpp"
#include "oracles.hpp"

using namespace nastaliq;

namespace {

// Frames whose column k lights up feature (label % 30); enough for a tiny
// model to make progress without touching the filesystem.
Dataset toy_dataset(std::size_t n, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = {static_cast<int>(i % 5), 1, static_cast<int>(i / 5)};
    for (std::size_t k = 1 + rng.below(3); k > 0; --k) s.target.push_back(static_cast<Label>(1 + rng.below(classes - 1)));
    s.inputs = Matrix::Ones(static_cast<Eigen::Index>(4 * s.target.size() + 2), kXHeight);
    for (std::size_t j = 0; j < s.target.size(); ++j) {
      s.inputs(static_cast<Eigen::Index>(4 * j + 2), static_cast<Eigen::Index>(s.target[j] % kXHeight)) = 0.0;
    }
    out.push_back(std::move(s));
  }
  return out;
}

Alphabet alphabet_of(std::size_t classes) {
  std::vector<std::string> tokens;
  for (std::size_t k = 1; k < classes; ++k) tokens.push_back("t" + std::to_string(k));
  return Alphabet(tokens);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.hidden_size = 4;
  cfg.max_epochs = 3;
  cfg.reproducible = true;
  return cfg;
}

bool same_bits(const BlstmModel& a, const BlstmModel& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (!std::equal(ta[k].begin(), ta[k].end(), tb[k].begin(), tb[k].end())) return false;
  }
  return true;
}

}  // namespace

TEST(TrainConfig, Validation) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), Error);
  };
  bad([](TrainConfig& c) { c.learning_rate = 0.0; });
  bad([](TrainConfig& c) { c.momentum = 1.0; });
  bad([](TrainConfig& c) { c.momentum = -0.1; });
  bad([](TrainConfig& c) { c.patience = 0; });
  bad([](TrainConfig& c) { c.gradient_clip = 0.0; });
  bad([](TrainConfig& c) { c.hidden_size = 0; });
}

TEST(MomentumSgd, ZeroLearningRateLeavesParametersBitIdentical) {
  Rng rng(1);
  auto model = oracle::random_model(kXHeight, 3, 4, rng);
  const auto before = model;
  MomentumSgd sgd(model, 0.0, 0.9, 1.0);
  for (int step = 0; step < 5; ++step) sgd.step(model, oracle::random_model(kXHeight, 3, 4, rng, 10.0));
  EXPECT_TRUE(same_bits(model, before));
}

TEST(MomentumSgd, ClipsEachComponent) {
  auto model = init_model(2, 1, 2, 1);
  model.set_zero();
  auto grad = model;
  for (auto t : grad.tensors()) std::fill(t.begin(), t.end(), 50.0);
  MomentumSgd sgd(model, 0.1, 0.5, 1.0);
  sgd.step(model, grad);
  for (auto t : model.tensors()) {
    for (double v : t) EXPECT_DOUBLE_EQ(v, -0.1);
  }
  sgd.step(model, grad);
  // v = 0.5 * -0.1 - 0.1
  for (auto t : model.tensors()) {
    for (double v : t) EXPECT_DOUBLE_EQ(v, -0.1 - 0.15);
  }
}

TEST(Train, PatienceOneStopsAtEpochTwoWhenValCannotImprove) {
  const auto data = toy_dataset(10, 4, 2);
  auto cfg = small_config();
  cfg.learning_rate = 1e-12;  // decodes stay put, so val error is constant
  cfg.patience = 1;
  cfg.max_epochs = 10;
  const auto r = train(data, data, alphabet_of(4), cfg);
  EXPECT_EQ(r.history.size(), 2u);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.history[0].val_label_error, r.history[1].val_label_error);
}

TEST(Train, ReproducibleRunsAreIdentical) {
  const auto data = toy_dataset(12, 5, 3);
  const auto cfg = small_config();
  const auto a = train(data, data, alphabet_of(5), cfg);
  const auto b = train(data, data, alphabet_of(5), cfg);
  EXPECT_EQ(metrics_csv(a.history, true), metrics_csv(b.history, true));
  EXPECT_TRUE(same_bits(a.best, b.best));
}

TEST(Train, MiniBatchThreadCountDoesNotChangeResult) {
  const auto data = toy_dataset(12, 5, 4);
  auto cfg = small_config();
  cfg.batch_size = 4;
  cfg.threads = 1;
  const auto a = train(data, data, alphabet_of(5), cfg);
  cfg.threads = 3;
  const auto b = train(data, data, alphabet_of(5), cfg);
  EXPECT_TRUE(same_bits(a.best, b.best));
  EXPECT_EQ(metrics_csv(a.history, true), metrics_csv(b.history, true));
}

TEST(Train, BestCheckpointHasMinimumValidationError) {
  const auto data = toy_dataset(15, 4, 5);
  auto cfg = small_config();
  cfg.max_epochs = 8;
  const auto r = train(data, data, alphabet_of(4), cfg);
  double lowest = 1e300;
  for (const auto& m : r.history) lowest = std::min(lowest, m.val_label_error);
  EXPECT_EQ(r.best_val_label_error, lowest);
  EXPECT_EQ(r.history[r.best_epoch - 1].val_label_error, lowest);
  EXPECT_EQ(evaluate(r.best, data).label_error_rate, lowest);
  for (const auto& m : r.history) {
    EXPECT_GE(m.train_ctc_loss, 0.0);
    EXPECT_GE(m.train_label_error, 0.0);
    EXPECT_GE(m.wall_seconds, 0.0);
  }
}

TEST(Train, InfeasibleSamplesAreSkippedAndCounted) {
  auto data = toy_dataset(10, 4, 6);
  data[3].inputs = Matrix::Ones(1, kXHeight);
  data[3].target = {1, 1};
  data[7].inputs = Matrix::Ones(0, kXHeight);
  const auto r = train(data, toy_dataset(3, 4, 7), alphabet_of(4), small_config());
  EXPECT_EQ(r.skipped, 2u);
  EXPECT_EQ(r.processed + r.skipped, data.size());
  EXPECT_EQ(r.skipped_ids, (std::vector<SampleId>{data[3].id, data[7].id}));
}

TEST(Train, EmptySplits) {
  const auto data = toy_dataset(3, 4, 8);
  EXPECT_THROW(train(Dataset{}, data, alphabet_of(4), small_config()), Error);
  EXPECT_THROW(train(data, Dataset{}, alphabet_of(4), small_config()), Error);
  try {
    evaluate(init_model(kXHeight, 2, 4, 1), Dataset{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty split");
  }
}

TEST(Evaluate, PureAndPerfectOnMatchingOutputs) {
  // Constant logits that always favour label 1: every decode is exactly [1].
  auto model = init_model(kXHeight, 2, 3, 1);
  model.output_weights.setZero();
  model.output_bias << 0.0, 5.0, 0.0;
  Dataset data = toy_dataset(6, 3, 9);
  for (auto& s : data) s.target = {1};
  const auto a = evaluate(model, data);
  EXPECT_EQ(a.label_error_rate, 0.0);
  const auto b = evaluate(model, data, 3);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].decoded, b.samples[i].decoded);
}

TEST(MetricsCsv, Format) {
  const std::vector<EpochMetrics> h{{1, 2.5, 0.5, 0.25, 1.75}};
  EXPECT_EQ(metrics_csv(h, false),
            "epoch,train_ctc_loss,train_label_error,val_label_error,wall_seconds\n1,2.5,0.5,0.25,1.75\n");
  EXPECT_EQ(metrics_csv(h, true),
            "epoch,train_ctc_loss,train_label_error,val_label_error,wall_seconds\n1,2.5,0.5,0.25,0\n");
}

class TrainOnSynth : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("train");
    SynthConfig cfg;
    cfg.glyph_classes = 3;
    cfg.lines_per_page = 4;
    cfg.tokens_max = 4;
    generate_corpus(cfg, 6, dir_->path());
  }
  static void TearDownTestSuite() { delete dir_; }
  static oracle::TempDir* dir_;
};

oracle::TempDir* TrainOnSynth::dir_ = nullptr;

TEST_F(TrainOnSynth, EvaluateChecksFingerprint) {
  const auto manifest = load_manifest(*dir_ / "manifest.tsv");
  const auto alphabet = Alphabet::load(*dir_ / "alphabet.txt");
  auto cfg = small_config();
  cfg.max_epochs = 1;
  const auto r = train(manifest, alphabet, cfg);
  EXPECT_NO_THROW(evaluate(r.best, manifest, Split::test, alphabet));
  const Alphabet other({"x"});
  EXPECT_THROW(evaluate(r.best, manifest, Split::test, other), Error);

  oracle::TempDir out("train");
  const auto result = evaluate(r.best, manifest, Split::test, alphabet);
  write_eval_tsv(result, alphabet, out / "eval.tsv");
  const auto text = oracle::read_bytes(out / "eval.tsv");
  EXPECT_EQ(text.rfind("sample_id\tdistance\ttarget_length\tdecoded\ttarget\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), result.samples.size() + 1);
}

TEST_F(TrainOnSynth, SingleSizeSweepEqualsTrainPlusEvaluate) {
  const auto manifest = load_manifest(*dir_ / "manifest.tsv");
  const auto alphabet = Alphabet::load(*dir_ / "alphabet.txt");
  auto cfg = small_config();
  cfg.max_epochs = 2;
  cfg.hidden_size = 3;
  const auto rows = sweep_hidden_sizes(manifest, alphabet, {3}, cfg);
  ASSERT_EQ(rows.size(), 1u);
  const auto r = train(manifest, alphabet, cfg);
  EXPECT_EQ(rows[0].best_val_label_error, r.best_val_label_error);
  EXPECT_EQ(rows[0].test_label_error, evaluate(r.best, manifest, Split::test, alphabet).label_error_rate);
  EXPECT_EQ(rows[0].epochs, r.history.size());
  EXPECT_THROW(sweep_hidden_sizes(manifest, alphabet, {4, 4}, cfg), Error);
  EXPECT_THROW(sweep_hidden_sizes(manifest, alphabet, {}, cfg), Error);
  EXPECT_EQ(sweep_csv(rows).rfind("hidden_size,best_val_label_error,test_label_error,train_seconds\n3,", 0), 0u);
}

TEST_F(TrainOnSynth, CancelStopsBeforeNextEpoch) {
  const auto manifest = load_manifest(*dir_ / "manifest.tsv");
  const auto alphabet = Alphabet::load(*dir_ / "alphabet.txt");
  auto cfg = small_config();
  cfg.max_epochs = 5;
  std::size_t seen = 0;
  EXPECT_THROW(train(manifest, alphabet, cfg,
                     [&](const EpochMetrics&) {
                       ++seen;
                       request_cancel();
                     }),
               Error);
  reset_cancel();
  EXPECT_EQ(seen, 1u);
}
