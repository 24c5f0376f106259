#ifndef HDQN_MLP_HPP
#define HDQN_MLP_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hdqn/binary_io.hpp"
#include "hdqn/core.hpp"
#include "hdqn/qtable.hpp"

namespace hdqn {

/// Input vector stored as (index, value) pairs; one-hot encodings have one or
/// two entries, dense inputs list every coordinate.
struct SparseInput {
  std::vector<std::size_t> index;
  std::vector<double> value;

  void clear() {
    index.clear();
    value.clear();
  }
  void add(std::size_t i, double v) {
    index.push_back(i);
    value.push_back(v);
  }
  static SparseInput dense(std::span<const double> x) {
    SparseInput in;
    for (std::size_t i = 0; i < x.size(); ++i) in.add(i, x[i]);
    return in;
  }
};

/// Fully connected ReLU network. Parameters live in one flat vector, layer by
/// layer: weights indexed [in][out] (input-major), then biases [out]. The
/// output layer is linear.
class MlpNet {
 public:
  MlpNet() = default;

  explicit MlpNet(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    require(sizes_.size() >= 2, "MlpNet: need at least input and output sizes");
    for (std::size_t s : sizes_) require(s > 0, "MlpNet: layer sizes must be positive");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += sizes_[l] * sizes_[l + 1];
      bias_offset_.push_back(offset);
      offset += sizes_[l + 1];
    }
    params_.assign(offset, 0.0);
  }

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  void initialize(RngStream& rng) {
    std::fill(params_.begin(), params_.end(), 0.0);
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      auto w = weights(l);
      for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> weights(std::size_t l) { return {params_.data() + weight_offset_[l], sizes_[l] * sizes_[l + 1]}; }
  std::span<double> biases(std::size_t l) { return {params_.data() + bias_offset_[l], sizes_[l + 1]}; }

  /// Activations of every layer for one input; the last entry is the output.
  struct Trace {
    std::vector<std::vector<double>> act;  // act[0] = first hidden layer ... act[L-1] = output
  };

  void forward(const SparseInput& x, Trace& trace) const {
    trace.act.resize(layer_count());
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const std::size_t in = sizes_[l];
      const std::size_t out = sizes_[l + 1];
      auto& a = trace.act[l];
      a.assign(params_.begin() + static_cast<std::ptrdiff_t>(bias_offset_[l]),
               params_.begin() + static_cast<std::ptrdiff_t>(bias_offset_[l] + out));
      const double* w = params_.data() + weight_offset_[l];
      if (l == 0) {
        for (std::size_t k = 0; k < x.index.size(); ++k) {
          require(x.index[k] < in, "MlpNet::forward: input index out of range");
          const double v = x.value[k];
          const double* row = w + x.index[k] * out;
          for (std::size_t o = 0; o < out; ++o) a[o] += v * row[o];
        }
      } else {
        const auto& prev = trace.act[l - 1];
        for (std::size_t i = 0; i < in; ++i) {
          const double v = prev[i];
          if (v == 0.0) continue;
          const double* row = w + i * out;
          for (std::size_t o = 0; o < out; ++o) a[o] += v * row[o];
        }
      }
      if (l + 1 < layer_count()) {
        for (double& v : a) v = std::max(v, 0.0);
      }
    }
  }

  std::vector<double> forward(const SparseInput& x) const {
    Trace t;
    forward(x, t);
    return t.act.back();
  }

  /// Accumulates d(out_grad . output)/d(params) into `grad` (same layout as
  /// parameters). Records touched first-layer rows in `touched`.
  void backward(const SparseInput& x, const Trace& trace, std::span<const double> out_grad, std::span<double> grad,
                std::vector<std::size_t>* touched = nullptr) const {
    std::vector<double> delta(out_grad.begin(), out_grad.end());
    for (std::size_t l = layer_count(); l-- > 0;) {
      const std::size_t in = sizes_[l];
      const std::size_t out = sizes_[l + 1];
      double* gb = grad.data() + bias_offset_[l];
      double* gw = grad.data() + weight_offset_[l];
      for (std::size_t o = 0; o < out; ++o) gb[o] += delta[o];
      if (l == 0) {
        for (std::size_t k = 0; k < x.index.size(); ++k) {
          const double v = x.value[k];
          double* row = gw + x.index[k] * out;
          for (std::size_t o = 0; o < out; ++o) row[o] += v * delta[o];
          if (touched) touched->push_back(x.index[k]);
        }
        break;
      }
      const auto& prev = trace.act[l - 1];
      const double* w = params_.data() + weight_offset_[l];
      std::vector<double> prev_delta(in, 0.0);
      for (std::size_t i = 0; i < in; ++i) {
        const double v = prev[i];
        double* row = gw + i * out;
        const double* wrow = w + i * out;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) {
          row[o] += v * delta[o];
          acc += wrow[o] * delta[o];
        }
        prev_delta[i] = v > 0.0 ? acc : 0.0;  // ReLU derivative, 0 at the kink
      }
      delta.swap(prev_delta);
    }
  }

  std::size_t weight_offset(std::size_t l) const { return weight_offset_[l]; }
  std::size_t bias_offset(std::size_t l) const { return bias_offset_[l]; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<double> params_;
};

struct MlpOptions {
  std::vector<std::size_t> hidden = {64};
  double learning_rate = 2.5e-4;
  std::size_t sync_period = 1000;  // training steps between target syncs
};

/// Goal-conditioned Q-network over one-hot inputs, trained by plain SGD on
/// the mean squared TD error against a frozen target copy.
class MlpQ {
 public:
  static constexpr std::string_view kMagic = "HDQNMLP1";
  static constexpr std::uint32_t kVersion = 1;

  MlpQ(QShape shape, MlpOptions options, RngStream& init_rng) : shape_(shape), options_(std::move(options)) {
    require(shape.states > 0 && shape.outputs > 0, "MlpQ: empty shape");
    require(options_.learning_rate > 0.0, "MlpQ: learning rate must be positive");
    require(options_.sync_period > 0, "MlpQ: sync period must be positive");
    std::vector<std::size_t> sizes{shape.states + shape.contexts};
    sizes.insert(sizes.end(), options_.hidden.begin(), options_.hidden.end());
    sizes.push_back(shape.outputs);
    live_ = MlpNet(sizes);
    live_.initialize(init_rng);
    grad_.assign(live_.parameters().size(), 0.0);
    sync_target();
  }

  const QShape& shape() const { return shape_; }
  const MlpOptions& options() const { return options_; }
  MlpNet& network() { return live_; }
  const MlpNet& network() const { return live_; }
  const MlpNet& snapshot() const { return target_; }
  std::uint64_t train_steps() const { return steps_; }

  /// One-hot state, followed by one-hot goal when the shape has goals.
  SparseInput encode(StateId s, std::size_t context = 0) const {
    SparseInput in;
    encode_into(s, context, in);
    return in;
  }

  void encode_into(StateId s, std::size_t context, SparseInput& in) const {
    require(s.index < shape_.states, "MlpQ: state out of range");
    require(context < shape_.context_slots(), "MlpQ: goal out of range");
    in.clear();
    in.add(s.index, 1.0);
    if (shape_.contexts > 0) in.add(shape_.states + context, 1.0);
  }

  std::vector<double> evaluate(StateId s, std::size_t context = 0) const {
    encode_into(s, context, scratch_in_);
    return live_.forward(scratch_in_);
  }

  std::vector<double> evaluate_snapshot(StateId s, std::size_t context = 0) const {
    encode_into(s, context, scratch_in_);
    return target_.forward(scratch_in_);
  }

  double target(const Backup& b, double gamma) const {
    if (b.terminal) return b.reward;
    const auto next = evaluate_snapshot(b.next, b.context);
    return b.reward + gamma * *std::max_element(next.begin(), next.end());
  }

  /// Mean over the batch of (target - Q(s, o))^2 with targets from the snapshot.
  double loss(std::span<const Backup> batch, double gamma) const {
    require(!batch.empty(), "MlpQ::loss: empty batch");
    double total = 0.0;
    for (const auto& b : batch) {
      const double q = evaluate(b.state, b.context)[checked_output(b)];
      const double e = target(b, gamma) - q;
      total += e * e;
    }
    return total / static_cast<double>(batch.size());
  }

  /// Dense gradient of loss() with respect to the live parameters.
  std::vector<double> gradient(std::span<const Backup> batch, double gamma) const {
    std::vector<double> g(live_.parameters().size(), 0.0);
    accumulate_gradient(batch, gamma, g, nullptr);
    return g;
  }

  /// One SGD step on loss(); returns the pre-step loss. Syncs the snapshot
  /// every `sync_period` steps.
  double train(std::span<const Backup> batch, double gamma) {
    require(!batch.empty(), "MlpQ::train: empty batch");
    touched_.clear();
    const double l = accumulate_gradient(batch, gamma, grad_, &touched_);
    if (!std::isfinite(l)) throw DivergenceError("MlpQ::train: non-finite loss");

    const double lr = options_.learning_rate;
    auto p = live_.parameters();
    const std::size_t first_out = live_.sizes()[1];
    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
    for (std::size_t row : touched_) {
      const std::size_t base = live_.weight_offset(0) + row * first_out;
      for (std::size_t o = 0; o < first_out; ++o) {
        p[base + o] -= lr * grad_[base + o];
        grad_[base + o] = 0.0;
      }
    }
    for (std::size_t i = live_.bias_offset(0); i < p.size(); ++i) {
      p[i] -= lr * grad_[i];
      grad_[i] = 0.0;
    }
    if (++steps_ % options_.sync_period == 0) sync_target();
    return l;
  }

  void sync_target() { target_ = live_; }

  void save(BinaryWriter& w) const {
    w.magic(kMagic);
    w.u32(kVersion);
    w.u64(shape_.states);
    w.u64(shape_.contexts);
    w.u64(shape_.outputs);
    w.f64(options_.learning_rate);
    w.u64(options_.sync_period);
    const auto& sizes = live_.sizes();
    w.u32(static_cast<std::uint32_t>(sizes.size()));
    for (std::size_t s : sizes) w.u64(s);
    for (double v : live_.parameters()) w.f64(v);
  }

  static MlpQ load(BinaryReader& r) {
    r.expect_magic(kMagic);
    if (r.u32() != kVersion) throw FormatError("MlpQ: unsupported version");
    QShape shape;
    shape.states = r.u64();
    shape.contexts = r.u64();
    shape.outputs = r.u64();
    MlpOptions options;
    options.learning_rate = r.f64();
    options.sync_period = r.u64();
    const std::uint32_t n = r.u32();
    if (n < 2) throw FormatError("MlpQ: too few layers");
    std::vector<std::size_t> sizes(n);
    for (auto& s : sizes) s = r.u64();
    if (sizes.front() != shape.states + shape.contexts || sizes.back() != shape.outputs) {
      throw FormatError("MlpQ: layer sizes do not match shape");
    }
    options.hidden.assign(sizes.begin() + 1, sizes.end() - 1);
    RngStream unused(0, StreamId::initialization);
    MlpQ q(shape, options, unused);
    for (double& v : q.live_.parameters()) v = r.f64();
    q.sync_target();
    return q;
  }

 private:
  std::size_t checked_output(const Backup& b) const {
    require(b.output < shape_.outputs, "MlpQ: output index out of range");
    return b.output;
  }

  double accumulate_gradient(std::span<const Backup> batch, double gamma, std::span<double> grad,
                             std::vector<std::size_t>* touched) const {
    const double scale = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    std::vector<double> out_grad(shape_.outputs, 0.0);
    for (const auto& b : batch) {
      const std::size_t o = checked_output(b);
      const double y = target(b, gamma);
      encode_into(b.state, b.context, scratch_in_);
      live_.forward(scratch_in_, trace_);
      const double e = y - trace_.act.back()[o];
      total += e * e;
      std::fill(out_grad.begin(), out_grad.end(), 0.0);
      out_grad[o] = -2.0 * e * scale;
      live_.backward(scratch_in_, trace_, out_grad, grad, touched);
    }
    return total * scale;
  }

  QShape shape_;
  MlpOptions options_;
  MlpNet live_;
  MlpNet target_;
  std::vector<double> grad_;
  std::vector<std::size_t> touched_;
  std::uint64_t steps_ = 0;
  mutable SparseInput scratch_in_;
  mutable MlpNet::Trace trace_;
};

}  // namespace hdqn

#endif  // HDQN_MLP_HPP
