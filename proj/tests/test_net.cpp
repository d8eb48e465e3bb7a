#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "nastaliq/ctc.hpp"
#include "nastaliq/error.hpp"
#include "nastaliq/net.hpp"
#include "oracles.hpp"

using namespace nastaliq;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool same_bits(const BlstmModel& a, const BlstmModel& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].size() != tb[k].size()) return false;
    if (!std::equal(ta[k].begin(), ta[k].end(), tb[k].begin())) return false;
  }
  return a.alphabet_fingerprint == b.alphabet_fingerprint;
}

LabelSequence random_target(std::size_t T, std::size_t K, Rng& rng) {
  while (true) {
    LabelSequence y;
    for (std::size_t n = 1 + rng.below(3); n > 0; --n) y.push_back(static_cast<Label>(1 + rng.below(K - 1)));
    if (ctc_min_frames(y) <= T) return y;
  }
}

}  // namespace

TEST(InitModel, SmallestShapes) {
  const auto m = init_model(30, 1, 2, 1);
  EXPECT_EQ(m.forward.W.rows(), 4);
  EXPECT_EQ(m.forward.W.cols(), 30);
  EXPECT_EQ(m.forward.R.rows(), 4);
  EXPECT_EQ(m.forward.R.cols(), 1);
  EXPECT_EQ(m.output_weights.rows(), 2);
  EXPECT_EQ(m.output_weights.cols(), 2);
  EXPECT_EQ(m.output_bias.size(), 2);
  EXPECT_EQ(m.backward.W.cols(), 30);
  EXPECT_EQ(m.parameter_count(), 2u * (4 * 30 + 4 * 1 + 4) + 2 * 2 + 2);
}

TEST(InitModel, DeterministicRangesAndForgetBias) {
  const auto a = init_model(30, 5, 4, 9);
  EXPECT_TRUE(same_bits(a, init_model(30, 5, 4, 9)));
  EXPECT_FALSE(same_bits(a, init_model(30, 5, 4, 10)));
  for (const auto* layer : {&a.forward, &a.backward}) {
    EXPECT_LE(layer->W.cwiseAbs().maxCoeff(), 0.1);
    EXPECT_LE(layer->R.cwiseAbs().maxCoeff(), 0.1);
    for (Eigen::Index g = 0; g < 4; ++g) {
      const double expect = g == static_cast<Eigen::Index>(Gate::forget) ? 1.0 : 0.0;
      for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(layer->b(g * 5 + i), expect);
    }
  }
  EXPECT_LE(a.output_weights.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_TRUE((a.output_bias.array() == 0.0).all());
}

TEST(InitModel, InvalidSizes) {
  EXPECT_THROW(init_model(30, 0, 4, 1), Error);
  EXPECT_THROW(init_model(30, 4, 1, 1), Error);
}

TEST(LstmForward, EmptySequence) {
  const auto m = init_model(3, 2, 2, 1);
  const auto cache = lstm_forward(m.forward, Matrix(0, 3));
  EXPECT_EQ(cache.hidden.rows(), 0);
  EXPECT_EQ(blstm_forward(m, Matrix(0, 3)).posteriors.length(), 0u);
}

TEST(LstmForward, ZeroWeightsGiveZeroHidden) {
  LstmLayerParams p(3, 4);
  Rng rng(1);
  const auto cache = lstm_forward(p, oracle::random_matrix(6, 3, rng));
  EXPECT_EQ(cache.hidden.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LstmForward, ScalarClosedForm) {
  LstmLayerParams p(1, 1);
  // Rows: input, forget, candidate, output.
  p.W << 0.5, -0.3, 0.8, 0.2;
  p.R << 0.1, 0.4, -0.6, 0.7;
  p.b << 0.05, 1.0, -0.1, 0.2;
  Matrix x(2, 1);
  x << 0.9, -0.4;
  const auto cache = lstm_forward(p, x);

  double h = 0.0, c = 0.0;
  for (int t = 0; t < 2; ++t) {
    const double xi = x(t, 0);
    const double i = logistic(0.5 * xi + 0.1 * h + 0.05);
    const double f = logistic(-0.3 * xi + 0.4 * h + 1.0);
    const double z = std::tanh(0.8 * xi - 0.6 * h - 0.1);
    const double o = logistic(0.2 * xi + 0.7 * h + 0.2);
    c = f * c + i * z;
    h = o * std::tanh(c);
    EXPECT_NEAR(cache.cell(t, 0), c, 1e-15);
    EXPECT_NEAR(cache.hidden(t, 0), h, 1e-15);
  }
}

TEST(LstmForward, DimensionMismatch) {
  LstmLayerParams p(3, 2);
  EXPECT_THROW(lstm_forward(p, Matrix::Zero(4, 2)), Error);
}

TEST(BlstmForward, RowsSumToOneAndLengthPreserved) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto T = 1 + rng.below(10);
    const auto K = 2 + rng.below(5);
    const auto m = oracle::random_model(4, 1 + rng.below(4), K, rng, 3.0);
    const auto fwd = blstm_forward(m, oracle::random_matrix(T, 4, rng));
    ASSERT_EQ(fwd.posteriors.length(), T);
    for (Eigen::Index t = 0; t < fwd.posteriors.probs.rows(); ++t) {
      EXPECT_NEAR(fwd.posteriors.probs.row(t).sum(), 1.0, 1e-9);
      EXPECT_GT(fwd.posteriors.probs.row(t).minCoeff(), 0.0);
      EXPECT_LT(fwd.posteriors.probs.row(t).maxCoeff(), 1.0);
    }
  }
}

TEST(BlstmForward, ZeroOutputWeightsGiveUniform) {
  Rng rng(3);
  auto m = oracle::random_model(4, 3, 5, rng);
  m.output_weights.setZero();
  m.output_bias.setZero();
  const auto fwd = blstm_forward(m, oracle::random_matrix(7, 4, rng));
  for (Eigen::Index i = 0; i < fwd.posteriors.probs.size(); ++i) EXPECT_NEAR(fwd.posteriors.probs.data()[i], 0.2, 1e-15);
}

TEST(BlstmForward, ReverseAndSwapSymmetry) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto H = 1 + rng.below(4);
    const auto K = 2 + rng.below(3);
    const auto T = 1 + rng.below(8);
    const auto m = oracle::random_model(3, H, K, rng);
    const auto x = oracle::random_matrix(T, 3, rng);

    BlstmModel swapped = m;
    std::swap(swapped.forward, swapped.backward);
    const auto h = static_cast<Eigen::Index>(H);
    swapped.output_weights.leftCols(h) = m.output_weights.rightCols(h);
    swapped.output_weights.rightCols(h) = m.output_weights.leftCols(h);
    const Matrix xr = x.colwise().reverse();

    const auto a = blstm_forward(m, x).posteriors.probs;
    const auto b = blstm_forward(swapped, xr).posteriors.probs;
    const Matrix br = b.colwise().reverse();
    EXPECT_LE((a - br).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BlstmBackward, ZeroGradientGivesZero) {
  Rng rng(5);
  const auto m = oracle::random_model(3, 2, 3, rng);
  const auto fwd = blstm_forward(m, oracle::random_matrix(4, 3, rng));
  const auto g = blstm_backward(m, fwd, Matrix::Zero(4, 3));
  for (auto t : g.tensors()) {
    for (double v : t) EXPECT_EQ(v, 0.0);
  }
}

TEST(BlstmBackward, ShapeMismatch) {
  Rng rng(5);
  const auto m = oracle::random_model(3, 2, 3, rng);
  const auto fwd = blstm_forward(m, oracle::random_matrix(4, 3, rng));
  EXPECT_THROW(blstm_backward(m, fwd, Matrix::Zero(5, 3)), Error);
}

TEST(BlstmBackward, DuplicatedSampleDoublesGradient) {
  Rng rng(6);
  const auto m = oracle::random_model(3, 3, 4, rng);
  const auto fwd = blstm_forward(m, oracle::random_matrix(5, 3, rng));
  const auto lg = ctc_loss(fwd.posteriors, {1, 2}).logit_gradient;
  const auto single = blstm_backward(m, fwd, lg);
  BlstmModel acc = m;
  acc.set_zero();
  blstm_backward_accumulate(m, fwd, lg, acc);
  blstm_backward_accumulate(m, fwd, lg, acc);
  const auto s = single.tensors();
  const auto d = acc.tensors();
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (std::size_t i = 0; i < s[k].size(); ++i) EXPECT_EQ(d[k][i], 2.0 * s[k][i]);
  }
}

TEST(BlstmBackward, FiniteDifferenceCheck) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto H = 1 + rng.below(4);
    const auto K = 2 + rng.below(3);
    const auto T = 1 + rng.below(6);
    const auto m = oracle::random_model(2, H, K, rng);
    const auto x = oracle::random_matrix(T, 2, rng);
    const auto result = oracle::check_gradients(m, x, random_target(T, K, rng));
    EXPECT_LT(result.max_relative_error, 1e-4) << "trial " << trial;
    EXPECT_EQ(result.parameters, m.parameter_count());
  }
}

// Each parameter class on its own: only that tensor is perturbed while the
// others are frozen, and the analytic gradient must still agree.
TEST(BlstmBackward, EveryGatePathPasses) {
  Rng rng(8);
  const auto m = oracle::random_model(2, 3, 4, rng);
  const auto x = oracle::random_matrix(6, 2, rng);
  const LabelSequence target{1, 3};
  const auto fwd = blstm_forward(m, x);
  const auto analytic = blstm_backward(m, fwd, ctc_loss(fwd.posteriors, target).logit_gradient);
  const auto grads = analytic.tensors();
  const double eps = 1e-5;
  BlstmModel probe = m;
  auto params = probe.tensors();
  ASSERT_EQ(params.size(), 8u);  // fwd W R b, bwd W R b, output W b
  for (std::size_t k = 0; k < params.size(); ++k) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double orig = params[k][i];
      params[k][i] = orig + eps;
      const double up = ctc_loss(blstm_forward(probe, x).posteriors, target).neg_log_prob;
      params[k][i] = orig - eps;
      const double down = ctc_loss(blstm_forward(probe, x).posteriors, target).neg_log_prob;
      params[k][i] = orig;
      const double n = (up - down) / (2 * eps);
      worst = std::max(worst, std::abs(grads[k][i] - n) / std::max({std::abs(grads[k][i]), std::abs(n), 1e-7}));
    }
    EXPECT_LT(worst, 1e-4) << "tensor " << k;
  }
}

TEST(Checkpoint, RoundTripBitExact) {
  oracle::TempDir dir("net");
  Rng rng(9);
  auto m = oracle::random_model(30, 3, 5, rng);
  m.alphabet_fingerprint = 0x1234abcd5678ef00ULL;
  save_model(m, dir / "m.bin");
  EXPECT_TRUE(same_bits(load_model(dir / "m.bin"), m));
  EXPECT_TRUE(same_bits(load_model(dir / "m.bin", m.alphabet_fingerprint), m));
  const auto bytes = oracle::read_bytes(dir / "m.bin");
  EXPECT_EQ(bytes.substr(0, 6), "BLSTM1");
  EXPECT_EQ(bytes.size(), 6 + 4 * 4 + 8 + 8 * m.parameter_count());
}

TEST(Checkpoint, TruncatedIsCorrupt) {
  oracle::TempDir dir("net");
  Rng rng(10);
  save_model(oracle::random_model(30, 2, 3, rng), dir / "m.bin");
  const auto bytes = oracle::read_bytes(dir / "m.bin");
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    std::ofstream(dir / "t.bin", std::ios::binary) << bytes.substr(0, cut);
    try {
      load_model(dir / "t.bin");
      FAIL() << "cut " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::data);
      EXPECT_NE(std::string(e.what()).find("corrupt checkpoint"), std::string::npos) << e.what();
    }
  }
  std::ofstream(dir / "long.bin", std::ios::binary) << bytes << 'x';
  EXPECT_THROW(load_model(dir / "long.bin"), Error);
}

TEST(Checkpoint, FingerprintMismatch) {
  oracle::TempDir dir("net");
  Rng rng(11);
  auto m = oracle::random_model(30, 2, 3, rng);
  m.alphabet_fingerprint = 77;
  save_model(m, dir / "m.bin");
  try {
    load_model(dir / "m.bin", 78);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("alphabet fingerprint mismatch"), std::string::npos);
  }
}

TEST(Checkpoint, VersionMismatch) {
  oracle::TempDir dir("net");
  Rng rng(12);
  save_model(oracle::random_model(30, 2, 3, rng), dir / "m.bin");
  auto bytes = oracle::read_bytes(dir / "m.bin");
  bytes[6] = 9;
  std::ofstream(dir / "v.bin", std::ios::binary) << bytes;
  try {
    load_model(dir / "v.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos);
  }
}
