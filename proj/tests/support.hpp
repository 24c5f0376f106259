#ifndef HDQN_TESTS_SUPPORT_HPP
#define HDQN_TESTS_SUPPORT_HPP

// Independent reference computations shared by unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hdqn/chain.hpp"
#include "hdqn/mlp.hpp"
#include "hdqn/qtable.hpp"

namespace hdqn::test {

/// Sampled Q-learning on the augmented chain, driven through ChainEnv::place
/// as a generative model. Every (pos, visited, action) pair is backed up once
/// per sweep with step size n^-0.7; the returned table is the running average
/// of the iterates over the second half of the sweeps.
inline QTable sampled_chain_q(double gamma, std::size_t sweeps, std::uint64_t seed) {
  QTable q(QShape{12, 0, 2}, 1.0), mean(QShape{12, 0, 2}, 1.0);
  std::vector<std::uint64_t> n(24, 0);
  double averaged = 0.0;
  ChainEnv env;
  RngStream rng(seed, StreamId::environment);
  for (std::size_t k = 0; k < sweeps; ++k) {
    for (std::size_t pos = 2; pos <= ChainEnv::kLength; ++pos) {
      for (bool visited : {false, true}) {
        for (std::size_t a = 0; a < 2; ++a) {
          env.place(pos, visited);
          const std::size_t s = env.augmented_index();
          const auto out = env.step(ActionId{a}, rng);
          const double alpha = std::pow(static_cast<double>(++n[s * 2 + a]), -0.7);
          q.backup(Backup{StateId{s}, 0, a, out.extrinsic_reward, StateId{env.augmented_index()}, out.terminal}, gamma,
                   alpha);
        }
      }
    }
    if (2 * k >= sweeps) {
      averaged += 1.0;
      for (std::size_t s = 0; s < 12; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
          mean.at(StateId{s}, 0, a) += (q.at(StateId{s}, 0, a) - mean.at(StateId{s}, 0, a)) / averaged;
        }
      }
    }
  }
  return mean;
}

/// Augmented indices the chain can actually occupy before termination:
/// positions 2..6, except position 6 with the visited flag clear.
inline bool reachable_nonterminal(std::size_t augmented) { return augmented >= 2 && augmented != 10; }

/// Plain dense forward pass over MlpNet's parameter layout; returns every
/// layer's pre-activation.
inline std::vector<std::vector<double>> reference_preactivations(const MlpNet& net, const std::vector<double>& x) {
  const auto& sizes = net.sizes();
  const auto p = net.parameters();
  std::vector<std::vector<double>> pre;
  std::vector<double> a = x;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    std::vector<double> z(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = p[offset + in * out + o];
      for (std::size_t i = 0; i < in; ++i) acc += a[i] * p[offset + i * out + o];
      z[o] = acc;
    }
    offset += in * out + out;
    pre.push_back(z);
    a = z;
    if (l + 2 < sizes.size()) {
      for (double& v : a) v = v > 0.0 ? v : 0.0;
    }
  }
  return pre;
}

/// Relative error used by gradient checks; tiny pairs compare absolutely.
inline double gradient_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-7) return std::abs(analytic - numeric);
  return std::abs(analytic - numeric) / scale;
}

struct GradientCheck {
  std::size_t instances = 0;
  std::size_t parameters_checked = 0;
  double max_error = 0.0;
};

namespace detail {

inline bool near_kink(const MlpNet& net, const std::vector<double>& x, double margin) {
  const auto pre = reference_preactivations(net, x);
  for (std::size_t l = 0; l + 1 < pre.size(); ++l) {
    for (double z : pre[l]) {
      if (std::abs(z) < margin) return true;
    }
  }
  return false;
}

inline std::vector<double> one_hot_input(const QShape& shape, std::size_t state, std::size_t context) {
  std::vector<double> x(shape.states + shape.contexts, 0.0);
  x[state] = 1.0;
  if (shape.contexts > 0) x[shape.states + context] = 1.0;
  return x;
}

}  // namespace detail

/// Compares MlpQ::gradient of the squared TD loss against central finite
/// differences (step h) on random networks and minibatches, then MlpNet's
/// backward pass on dense inputs. Instances with a ReLU pre-activation within
/// 1e-3 of the kink are redrawn, since the loss is not differentiable there.
inline GradientCheck mlp_gradient_check(std::size_t instances, std::uint64_t seed, double h = 1e-5) {
  GradientCheck result;
  RngStream rng(seed, StreamId::initialization);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  constexpr double kMargin = 1e-3;
  constexpr double kGamma = 0.9;

  while (result.instances < instances) {
    const QShape shape{2 + rng.below(6), rng.below(4), 2 + rng.below(4)};
    MlpOptions options;
    options.hidden.assign(1 + rng.below(2), 0);
    for (auto& width : options.hidden) width = 2 + rng.below(7);
    MlpQ q(shape, options, rng);
    for (double& p : q.network().parameters()) p = uniform(-1.0, 1.0);
    q.sync_target();
    for (double& p : q.network().parameters()) p += uniform(-0.5, 0.5);

    std::vector<Backup> batch(1 + rng.below(6));
    bool kink = false;
    for (auto& b : batch) {
      b = Backup{StateId{rng.below(shape.states)}, rng.below(shape.context_slots()), rng.below(shape.outputs),
                 uniform(-1.0, 1.0), StateId{rng.below(shape.states)}, rng.bernoulli(0.3)};
      kink = kink || detail::near_kink(q.network(), detail::one_hot_input(shape, b.state.index, b.context), kMargin);
    }
    if (kink) continue;

    const auto analytic = q.gradient(batch, kGamma);
    auto params = q.network().parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = q.loss(batch, kGamma);
      params[i] = saved - h;
      const double down = q.loss(batch, kGamma);
      params[i] = saved;
      result.max_error = std::max(result.max_error, gradient_error(analytic[i], (up - down) / (2.0 * h)));
      ++result.parameters_checked;
    }
    ++result.instances;
  }

  // Dense inputs through the raw network: objective c . f(x).
  for (std::size_t done = 0; done < instances;) {
    std::vector<std::size_t> sizes{1 + rng.below(5)};
    for (std::size_t l = 0, n = 1 + rng.below(3); l < n; ++l) sizes.push_back(2 + rng.below(6));
    sizes.push_back(1 + rng.below(4));
    MlpNet net(sizes);
    for (double& p : net.parameters()) p = uniform(-1.0, 1.0);
    std::vector<double> x(sizes.front()), c(sizes.back());
    for (double& v : x) v = uniform(-2.0, 2.0);
    for (double& v : c) v = uniform(-1.0, 1.0);
    if (detail::near_kink(net, x, kMargin)) continue;

    const auto input = SparseInput::dense(x);
    auto objective = [&] {
      const auto out = net.forward(input);
      double acc = 0.0;
      for (std::size_t o = 0; o < out.size(); ++o) acc += c[o] * out[o];
      return acc;
    };
    MlpNet::Trace trace;
    net.forward(input, trace);
    std::vector<double> analytic(net.parameters().size(), 0.0);
    net.backward(input, trace, c, analytic);
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = objective();
      params[i] = saved - h;
      const double down = objective();
      params[i] = saved;
      result.max_error = std::max(result.max_error, gradient_error(analytic[i], (up - down) / (2.0 * h)));
      ++result.parameters_checked;
    }
    ++done;
  }
  return result;
}

}  // namespace hdqn::test

#endif  // HDQN_TESTS_SUPPORT_HPP
