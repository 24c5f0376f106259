#ifndef HDQN_VALUE_FUNCTION_HPP
#define HDQN_VALUE_FUNCTION_HPP

#include <string_view>
#include <variant>
#include <vector>

#include "hdqn/mlp.hpp"
#include "hdqn/qtable.hpp"

namespace hdqn {

enum class Backend { tabular, mlp };

inline std::string_view to_string(Backend b) { return b == Backend::tabular ? "tabular" : "mlp"; }

/// Either backend behind one evaluate / train / sync surface.
class ValueFunction {
 public:
  explicit ValueFunction(QTable table) : impl_(std::move(table)) {}
  explicit ValueFunction(MlpQ net) : impl_(std::move(net)) {}

  Backend backend() const { return std::holds_alternative<QTable>(impl_) ? Backend::tabular : Backend::mlp; }

  const QShape& shape() const {
    return std::visit([](const auto& f) -> const QShape& { return f.shape(); }, impl_);
  }

  void evaluate(StateId s, std::size_t context, std::vector<double>& out) const {
    if (const auto* t = std::get_if<QTable>(&impl_)) {
      const auto v = t->evaluate(s, context);
      out.assign(v.begin(), v.end());
    } else {
      out = std::get<MlpQ>(impl_).evaluate(s, context);
    }
  }

  std::vector<double> evaluate(StateId s, std::size_t context = 0) const {
    std::vector<double> out;
    evaluate(s, context, out);
    return out;
  }

  std::size_t best(StateId s, std::size_t context = 0) const { return argmax(evaluate(s, context)); }

  /// One training step on a minibatch; returns the pre-step loss.
  double train(std::span<const Backup> batch, double gamma) {
    return std::visit([&](auto& f) { return f.train(batch, gamma); }, impl_);
  }

  /// Freezes the bootstrap targets to the current parameters (no-op for tables).
  void sync_target() {
    if (auto* net = std::get_if<MlpQ>(&impl_)) net->sync_target();
  }

  QTable* table() { return std::get_if<QTable>(&impl_); }
  const QTable* table() const { return std::get_if<QTable>(&impl_); }
  MlpQ* mlp() { return std::get_if<MlpQ>(&impl_); }
  const MlpQ* mlp() const { return std::get_if<MlpQ>(&impl_); }

  void save(BinaryWriter& w) const {
    std::visit([&](const auto& f) { f.save(w); }, impl_);
  }

  static ValueFunction load(BinaryReader& r, Backend backend) {
    if (backend == Backend::tabular) return ValueFunction(QTable::load(r));
    return ValueFunction(MlpQ::load(r));
  }

 private:
  std::variant<QTable, MlpQ> impl_;
};

}  // namespace hdqn

#endif  // HDQN_VALUE_FUNCTION_HPP
