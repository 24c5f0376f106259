#ifndef HDQN_QTABLE_HPP
#define HDQN_QTABLE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hdqn/binary_io.hpp"
#include "hdqn/core.hpp"

namespace hdqn {

/// Dimensions of a goal-conditioned value function: Q(state, context, output).
/// `contexts == 0` means the function takes no goal (meta-controller).
struct QShape {
  std::size_t states = 0;
  std::size_t contexts = 0;
  std::size_t outputs = 0;

  std::size_t context_slots() const { return contexts == 0 ? 1 : contexts; }
  friend bool operator==(const QShape&, const QShape&) = default;
};

/// One bootstrapped regression sample, shared by both time scales:
/// target = reward + gamma * max_o' Q(next, context, o') * (1 - terminal).
struct Backup {
  StateId state;
  std::size_t context = 0;
  std::size_t output = 0;
  double reward = 0.0;
  StateId next;
  bool terminal = false;
};

/// Index of the largest value; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), "argmax: empty value vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

/// Dense zero-initialized lookup table.
class QTable {
 public:
  static constexpr std::string_view kMagic = "HDQNTAB1";
  static constexpr std::uint32_t kVersion = 1;

  QTable(QShape shape, double learning_rate)
      : shape_(shape), alpha_(learning_rate), values_(shape.states * shape.context_slots() * shape.outputs, 0.0) {
    require(shape.states > 0 && shape.outputs > 0, "QTable: empty shape");
    require(learning_rate > 0.0 && learning_rate <= 1.0, "QTable: learning rate must lie in (0, 1]");
  }

  const QShape& shape() const { return shape_; }
  double learning_rate() const { return alpha_; }

  std::span<const double> evaluate(StateId s, std::size_t context = 0) const {
    return {values_.data() + offset(s, context), shape_.outputs};
  }

  double& at(StateId s, std::size_t context, std::size_t output) {
    require(output < shape_.outputs, "QTable: output out of range");
    return values_[offset(s, context) + output];
  }
  double at(StateId s, std::size_t context, std::size_t output) const {
    require(output < shape_.outputs, "QTable: output out of range");
    return values_[offset(s, context) + output];
  }

  double target(const Backup& b, double gamma) const {
    if (b.terminal) return b.reward;
    const auto next = evaluate(b.next, b.context);
    return b.reward + gamma * *std::max_element(next.begin(), next.end());
  }

  /// One Q-learning backup with this table's learning rate. Returns the TD error.
  double backup(const Backup& b, double gamma) { return backup(b, gamma, alpha_); }

  double backup(const Backup& b, double gamma, double alpha) {
    require(gamma >= 0.0 && gamma <= 1.0, "QTable::backup: discount must lie in [0, 1]");
    const double y = target(b, gamma);
    double& q = at(b.state, b.context, b.output);
    const double td = y - q;
    q += alpha * td;
    if (!std::isfinite(q)) throw DivergenceError("QTable::backup: non-finite value");
    return td;
  }

  /// Sequential backups over the batch; returns the mean squared TD error
  /// observed before each backup.
  double train(std::span<const Backup> batch, double gamma) {
    require(!batch.empty(), "QTable::train: empty batch");
    double sq = 0.0;
    for (const auto& b : batch) {
      const double td = backup(b, gamma);
      sq += td * td;
    }
    return sq / static_cast<double>(batch.size());
  }

  std::span<const double> values() const { return values_; }

  void save(BinaryWriter& w) const {
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(3);
    w.u64(shape_.states);
    w.u64(shape_.contexts);
    w.u64(shape_.outputs);
    w.f64(alpha_);
    for (double v : values_) w.f64(v);
  }

  static QTable load(BinaryReader& r) {
    r.expect_magic(kMagic);
    if (r.u32() != kVersion) throw FormatError("QTable: unsupported version");
    if (r.u32() != 3) throw FormatError("QTable: expected three dimensions");
    QShape shape;
    shape.states = r.u64();
    shape.contexts = r.u64();
    shape.outputs = r.u64();
    QTable t(shape, r.f64());
    for (double& v : t.values_) v = r.f64();
    return t;
  }

 private:
  std::size_t offset(StateId s, std::size_t context) const {
    require(s.index < shape_.states, "QTable: state out of range");
    require(context < shape_.context_slots(), "QTable: goal out of range");
    return (s.index * shape_.context_slots() + context) * shape_.outputs;
  }

  QShape shape_;
  double alpha_;
  std::vector<double> values_;
};

}  // namespace hdqn

#endif  // HDQN_QTABLE_HPP
