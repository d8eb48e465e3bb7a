#include "nastaliq/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "nastaliq/error.hpp"
#include "nastaliq/rng.hpp"

namespace nastaliq {
namespace {

using Index = Eigen::Index;

template <typename Tensor>
std::span<double> as_span(Tensor& t) {
  return {t.data(), static_cast<std::size_t>(t.size())};
}

template <typename Tensor>
std::span<const double> as_span(const Tensor& t) {
  return {t.data(), static_cast<std::size_t>(t.size())};
}

Vector logistic(const Vector& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

}  // namespace

LstmLayerParams::LstmLayerParams(std::size_t in, std::size_t h)
    : input_size(in),
      hidden_size(h),
      W(Matrix::Zero(static_cast<Index>(4 * h), static_cast<Index>(in))),
      R(Matrix::Zero(static_cast<Index>(4 * h), static_cast<Index>(h))),
      b(Vector::Zero(static_cast<Index>(4 * h))) {}

BlstmModel::BlstmModel(std::size_t input_size, std::size_t hidden_size, std::size_t alphabet_size)
    : forward(input_size, hidden_size),
      backward(input_size, hidden_size),
      output_weights(Matrix::Zero(static_cast<Index>(alphabet_size), static_cast<Index>(2 * hidden_size))),
      output_bias(Vector::Zero(static_cast<Index>(alphabet_size))) {
  if (input_size < 1 || hidden_size < 1) throw_usage("model needs input_size >= 1 and hidden_size >= 1");
  if (alphabet_size < 2) throw_usage("model needs an alphabet of at least 2 classes (blank + 1)");
}

std::vector<std::span<double>> BlstmModel::tensors() {
  return {as_span(forward.W),  as_span(forward.R),  as_span(forward.b),      as_span(backward.W),
          as_span(backward.R), as_span(backward.b), as_span(output_weights), as_span(output_bias)};
}

std::vector<std::span<const double>> BlstmModel::tensors() const {
  return {as_span(forward.W),  as_span(forward.R),  as_span(forward.b),      as_span(backward.W),
          as_span(backward.R), as_span(backward.b), as_span(output_weights), as_span(output_bias)};
}

std::size_t BlstmModel::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

void BlstmModel::set_zero() {
  for (auto t : tensors()) std::fill(t.begin(), t.end(), 0.0);
}

bool BlstmModel::all_finite() const {
  for (auto t : tensors()) {
    for (double v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

BlstmModel init_model(std::size_t input_size, std::size_t hidden_size, std::size_t alphabet_size,
                      std::uint64_t seed) {
  BlstmModel m(input_size, hidden_size, alphabet_size);
  Rng rng(seed);
  auto fill = [&](auto& tensor) {
    for (double& v : as_span(tensor)) v = rng.uniform(-0.1, 0.1);
  };
  for (LstmLayerParams* layer : {&m.forward, &m.backward}) {
    fill(layer->W);
    fill(layer->R);
    layer->gate_bias(Gate::forget).setOnes();
  }
  fill(m.output_weights);
  return m;
}

LstmCache lstm_forward(const LstmLayerParams& p, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != p.input_size) {
    throw_data("frame width " + std::to_string(inputs.cols()) + " does not match layer input size " +
               std::to_string(p.input_size));
  }
  const Index steps = inputs.rows();
  const auto h = static_cast<Index>(p.hidden_size);
  LstmCache c{Matrix(steps, 4 * h), Matrix(steps, h), Matrix(steps, h), Matrix(steps, h)};
  if (steps == 0) return c;

  const Matrix input_part = inputs * p.W.transpose();
  Vector h_prev = Vector::Zero(h);
  Vector c_prev = Vector::Zero(h);
  for (Index t = 0; t < steps; ++t) {
    const Vector a = input_part.row(t).transpose() + p.R * h_prev + p.b;
    const Vector i = logistic(a.segment(0, h));
    const Vector f = logistic(a.segment(h, h));
    const Vector z = a.segment(2 * h, h).array().tanh().matrix();
    const Vector o = logistic(a.segment(3 * h, h));
    const Vector cell = f.cwiseProduct(c_prev) + i.cwiseProduct(z);
    const Vector tc = cell.array().tanh().matrix();
    const Vector hid = o.cwiseProduct(tc);

    c.gates.row(t).segment(0, h) = i.transpose();
    c.gates.row(t).segment(h, h) = f.transpose();
    c.gates.row(t).segment(2 * h, h) = z.transpose();
    c.gates.row(t).segment(3 * h, h) = o.transpose();
    c.cell.row(t) = cell.transpose();
    c.tanh_cell.row(t) = tc.transpose();
    c.hidden.row(t) = hid.transpose();
    h_prev = hid;
    c_prev = cell;
  }
  return c;
}

Matrix lstm_backward(const LstmLayerParams& p, const Matrix& inputs, const LstmCache& cache,
                     const Matrix& hidden_grad, LstmLayerParams& grad) {
  const Index steps = inputs.rows();
  const auto h = static_cast<Index>(p.hidden_size);
  if (cache.hidden.rows() != steps || hidden_grad.rows() != steps || hidden_grad.cols() != h) {
    throw_data("backward pass does not match the cached forward pass");
  }
  Matrix pre_grad(steps, 4 * h);
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto gates = cache.gates.row(t);
    const Vector i = gates.segment(0, h).transpose();
    const Vector f = gates.segment(h, h).transpose();
    const Vector z = gates.segment(2 * h, h).transpose();
    const Vector o = gates.segment(3 * h, h).transpose();
    const Vector tc = cache.tanh_cell.row(t).transpose();
    const Vector c_prev = t > 0 ? Vector(cache.cell.row(t - 1).transpose()) : Vector::Zero(h);

    const Vector dh = hidden_grad.row(t).transpose() + dh_next;
    const Vector d_o = dh.cwiseProduct(tc);
    const Vector dc = dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
    const Vector d_i = dc.cwiseProduct(z);
    const Vector d_z = dc.cwiseProduct(i);
    const Vector d_f = dc.cwiseProduct(c_prev);

    auto row = pre_grad.row(t);
    row.segment(0, h) = (d_i.array() * i.array() * (1.0 - i.array())).matrix().transpose();
    row.segment(h, h) = (d_f.array() * f.array() * (1.0 - f.array())).matrix().transpose();
    row.segment(2 * h, h) = (d_z.array() * (1.0 - z.array().square())).matrix().transpose();
    row.segment(3 * h, h) = (d_o.array() * o.array() * (1.0 - o.array())).matrix().transpose();

    dc_next = dc.cwiseProduct(f);
    dh_next = p.R.transpose() * row.transpose();
  }
  if (steps > 0) {
    grad.W.noalias() += pre_grad.transpose() * inputs;
    if (steps > 1) {
      grad.R.noalias() += pre_grad.bottomRows(steps - 1).transpose() * cache.hidden.topRows(steps - 1);
    }
    grad.b += pre_grad.colwise().sum().transpose();
  }
  return pre_grad * p.W;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index t = 0; t < logits.rows(); ++t) {
    const double mx = logits.row(t).maxCoeff();
    out.row(t) = (logits.row(t).array() - mx).exp().matrix();
    out.row(t) /= out.row(t).sum();
  }
  return out;
}

Matrix frames_to_matrix(const FrameSequence& frames) {
  Matrix x(static_cast<Index>(frames.length()), static_cast<Index>(kXHeight));
  auto v = frames.values();
  std::copy(v.begin(), v.end(), x.data());
  return x;
}

BlstmForward blstm_forward(const BlstmModel& m, const Matrix& inputs) {
  BlstmForward out;
  out.inputs = inputs;
  out.forward = lstm_forward(m.forward, inputs);
  const Matrix reversed = inputs.colwise().reverse();
  out.backward = lstm_forward(m.backward, reversed);

  const auto h = static_cast<Index>(m.hidden_size());
  const Matrix bwd_aligned = out.backward.hidden.colwise().reverse();
  out.logits = out.forward.hidden * m.output_weights.leftCols(h).transpose() +
               bwd_aligned * m.output_weights.rightCols(h).transpose();
  out.logits.rowwise() += m.output_bias.transpose();
  out.posteriors.probs = softmax_rows(out.logits);
  return out;
}

BlstmForward blstm_forward(const BlstmModel& m, const FrameSequence& frames) {
  return blstm_forward(m, frames_to_matrix(frames));
}

void blstm_backward_accumulate(const BlstmModel& m, const BlstmForward& fwd, const Matrix& logit_grad,
                               BlstmModel& grad) {
  if (logit_grad.rows() != fwd.logits.rows() || logit_grad.cols() != fwd.logits.cols()) {
    throw_data("logit gradient shape does not match the forward pass");
  }
  const auto h = static_cast<Index>(m.hidden_size());
  const Matrix bwd_aligned = fwd.backward.hidden.colwise().reverse();

  grad.output_weights.leftCols(h).noalias() += logit_grad.transpose() * fwd.forward.hidden;
  grad.output_weights.rightCols(h).noalias() += logit_grad.transpose() * bwd_aligned;
  grad.output_bias += logit_grad.colwise().sum().transpose();

  const Matrix d_fwd = logit_grad * m.output_weights.leftCols(h);
  const Matrix d_bwd = (logit_grad * m.output_weights.rightCols(h)).colwise().reverse();
  lstm_backward(m.forward, fwd.inputs, fwd.forward, d_fwd, grad.forward);
  const Matrix reversed = fwd.inputs.colwise().reverse();
  lstm_backward(m.backward, reversed, fwd.backward, d_bwd, grad.backward);
}

BlstmModel blstm_backward(const BlstmModel& m, const BlstmForward& fwd, const Matrix& logit_grad) {
  BlstmModel grad(m.input_size(), m.hidden_size(), m.alphabet_size());
  grad.alphabet_fingerprint = m.alphabet_fingerprint;
  blstm_backward_accumulate(m, fwd, logit_grad, grad);
  return grad;
}

namespace {

constexpr char kMagic[6] = {'B', 'L', 'S', 'T', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

  std::uint64_t uint(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) corrupt("truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  void expect_magic() {
    if (bytes_.size() < sizeof(kMagic) || std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
      corrupt("bad magic");
    }
    pos_ = sizeof(kMagic);
  }

  bool at_end() const { return pos_ == bytes_.size(); }

  [[noreturn]] void corrupt(const std::string& why) const {
    throw_data("corrupt checkpoint " + path_.string() + ": " + why);
  }

 private:
  const std::string& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const BlstmModel& m, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(m.input_size()));
  put_u32(out, static_cast<std::uint32_t>(m.hidden_size()));
  put_u32(out, static_cast<std::uint32_t>(m.alphabet_size()));
  put_u64(out, m.alphabet_fingerprint);
  for (auto t : m.tensors()) {
    for (double v : t) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_data("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw_data("cannot write " + path.string());
}

BlstmModel load_model(const std::filesystem::path& path, std::optional<std::uint64_t> expected_fingerprint) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_data("unreadable file: " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  Reader in(bytes, path);
  in.expect_magic();
  const auto version = in.uint(4);
  if (version != kCheckpointVersion) {
    throw_data("checkpoint version mismatch: file has " + std::to_string(version) + ", expected " +
               std::to_string(kCheckpointVersion));
  }
  const auto input = in.uint(4);
  const auto hidden = in.uint(4);
  const auto classes = in.uint(4);
  const auto fingerprint = in.uint(8);
  if (input < 1 || hidden < 1 || classes < 2 || input > 4096 || hidden > 65536 || classes > 1000000) {
    in.corrupt("implausible dimensions");
  }
  if (expected_fingerprint && *expected_fingerprint != fingerprint) {
    throw_data("alphabet fingerprint mismatch: checkpoint was trained with a different alphabet");
  }
  BlstmModel m(input, hidden, classes);
  m.alphabet_fingerprint = fingerprint;
  for (auto t : m.tensors()) {
    for (double& v : t) v = std::bit_cast<double>(in.uint(8));
  }
  if (!in.at_end()) in.corrupt("trailing bytes");
  return m;
}

}  // namespace nastaliq
