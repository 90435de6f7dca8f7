#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "laesim/common.hpp"
#include "laesim/rng.hpp"
#include "laesim/version.hpp"

namespace laesim::nn {

enum class Activation { Tanh, Relu, Linear };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "linear") return Activation::Linear;
  throw ParseError("unknown activation: " + s);
}

/// Fully connected net, 64-bit floats throughout. Weights are (out x in),
/// batch data is column-per-sample.
struct DenseNet {
  std::vector<int> layer_sizes;          // e.g. {obs, 128, 128, 3}
  std::vector<Activation> activations;   // one per non-input layer
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
  std::vector<Eigen::VectorXd> biases;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }

  bool same_architecture(const DenseNet& o) const {
    return layer_sizes == o.layer_sizes && activations == o.activations;
  }
};

/// Xavier-uniform init: weights ~ U(-sqrt(6/(fan_in+fan_out)), +...), biases 0.
inline DenseNet init(const std::vector<int>& layer_sizes,
                     const std::vector<Activation>& activations, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ValidationError("net init: at least 2 layers");
  if (activations.size() != layer_sizes.size() - 1)
    throw ValidationError("net init: one activation per non-input layer");
  for (int s : layer_sizes)
    if (s < 1) throw ValidationError("net init: layer sizes >= 1");
  DenseNet net;
  net.layer_sizes = layer_sizes;
  net.activations = activations;
  Rng rng(mix_seed({seed, 0x494e4954ull}));  // "INIT"
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

inline Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Tanh: return z.array().tanh();
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Linear: return z;
  }
  return z;
}

/// Pre- and post-activations of one forward pass, reused by backward.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;   // z_l per layer
  std::vector<Eigen::MatrixXd> post;  // a_l per layer
  int batch() const { return static_cast<int>(input.cols()); }
};

/// Column-per-sample batched forward.
inline Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& x,
                                     ForwardCache* cache = nullptr) {
  if (x.rows() != net.input_size())
    throw ValidationError("forward: input dim " + std::to_string(x.rows()) + " != " +
                          std::to_string(net.input_size()));
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
    a = apply_activation(net.activations[l], z);
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(a);
    }
  }
  return a;
}

inline Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& x,
                               ForwardCache* cache = nullptr) {
  return forward_batch(net, x, cache).col(0);
}

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
};

/// Exact reverse-mode gradients of the cached composition. Returns dL/dx;
/// parameter gradients are filled only when `grads` is non-null (skipping the
/// weight-gradient GEMMs when only input gradients are needed).
inline Eigen::MatrixXd backward(const DenseNet& net, const ForwardCache& cache,
                                const Eigen::MatrixXd& dl_dy, Gradients* grads = nullptr) {
  if (cache.pre.size() != net.layer_count())
    throw ValidationError("backward: cache does not match net depth");
  if (dl_dy.rows() != net.output_size() || dl_dy.cols() != cache.input.cols())
    throw ValidationError("backward: output gradient shape mismatch");
  if (grads) {
    grads->d_weights.assign(net.layer_count(), Eigen::MatrixXd());
    grads->d_biases.assign(net.layer_count(), Eigen::VectorXd());
  }
  Eigen::MatrixXd delta = dl_dy;
  for (std::size_t li = net.layer_count(); li-- > 0;) {
    switch (net.activations[li]) {
      case Activation::Tanh:
        delta = delta.cwiseProduct(
            (1.0 - cache.post[li].array().square()).matrix());
        break;
      case Activation::Relu:
        delta = delta.cwiseProduct(
            (cache.pre[li].array() > 0.0).cast<double>().matrix());
        break;
      case Activation::Linear:
        break;
    }
    const Eigen::MatrixXd& a_prev = li == 0 ? cache.input : cache.post[li - 1];
    if (grads) {
      grads->d_weights[li] = delta * a_prev.transpose();
      grads->d_biases[li] = delta.rowwise().sum();
    }
    delta = (net.weights[li].transpose() * delta).eval();
  }
  return delta;  // dL/dx after the loop walks below layer 0
}

/// Bias-corrected Adam state; accumulator shapes mirror the net.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
};

inline AdamState make_adam(const DenseNet& net, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8) {
  AdamState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    s.m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    s.v_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return s;
}

class NonFiniteGradientError : public std::runtime_error {
 public:
  explicit NonFiniteGradientError(const std::string& what) : std::runtime_error(what) {}
};

/// One Adam step. Throws NonFiniteGradientError naming the offending block so
/// training halts rather than poisons the parameters.
inline void adam_step(DenseNet& net, const Gradients& grads, AdamState& state, double lr) {
  if (grads.d_weights.size() != net.layer_count() || grads.d_biases.size() != net.layer_count())
    throw ValidationError("adam: gradient block count mismatch");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (grads.d_weights[l].rows() != net.weights[l].rows() ||
        grads.d_weights[l].cols() != net.weights[l].cols() ||
        grads.d_biases[l].size() != net.biases[l].size())
      throw ValidationError("adam: gradient shape mismatch at layer " + std::to_string(l));
    if (!grads.d_weights[l].allFinite())
      throw NonFiniteGradientError("non-finite gradient in layer " + std::to_string(l) +
                                   " weights");
    if (!grads.d_biases[l].allFinite())
      throw NonFiniteGradientError("non-finite gradient in layer " + std::to_string(l) +
                                   " biases");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.d_weights[l];
    state.v_w[l] = state.beta2 * state.v_w[l] +
                   (1.0 - state.beta2) * grads.d_weights[l].array().square().matrix();
    net.weights[l].array() -=
        lr * (state.m_w[l].array() / bc1) / ((state.v_w[l].array() / bc2).sqrt() + state.epsilon);
    state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.d_biases[l];
    state.v_b[l] = state.beta2 * state.v_b[l] +
                   (1.0 - state.beta2) * grads.d_biases[l].array().square().matrix();
    net.biases[l].array() -=
        lr * (state.m_b[l].array() / bc1) / ((state.v_b[l].array() / bc2).sqrt() + state.epsilon);
  }
}

/// theta_target <- tau * theta_online + (1 - tau) * theta_target.
inline void soft_update(DenseNet& target, const DenseNet& online, double tau) {
  if (!target.same_architecture(online))
    throw ValidationError("soft_update: architecture mismatch");
  if (tau < 0.0 || tau > 1.0) throw ValidationError("soft_update: tau in [0,1]");
  for (std::size_t l = 0; l < target.layer_count(); ++l) {
    target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
    target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
  }
}

inline nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json acts = nlohmann::json::array();
  for (auto a : net.activations) acts.push_back(activation_name(a));
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    nlohmann::json w = nlohmann::json::array();
    for (int r = 0; r < net.weights[l].rows(); ++r)
      for (int c = 0; c < net.weights[l].cols(); ++c) w.push_back(net.weights[l](r, c));
    weights.push_back(std::move(w));
    nlohmann::json b = nlohmann::json::array();
    for (int r = 0; r < net.biases[l].size(); ++r) b.push_back(net.biases[l](r));
    biases.push_back(std::move(b));
  }
  return nlohmann::json{{"layer_sizes", net.layer_sizes},
                        {"activations", acts},
                        {"weights", weights},
                        {"biases", biases}};
}

inline DenseNet net_from_json(const nlohmann::json& j) {
  DenseNet net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (net.layer_sizes.size() < 2) throw ParseError("net: at least 2 layers");
  for (const auto& a : j.at("activations")) net.activations.push_back(activation_from_name(a));
  if (net.activations.size() != net.layer_sizes.size() - 1)
    throw ParseError("net: activation count mismatch");
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.layer_sizes.size() - 1 || biases.size() != weights.size())
    throw ParseError("net: layer parameter count mismatch");
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int rows = net.layer_sizes[l + 1];
    const int cols = net.layer_sizes[l];
    const auto& wj = weights[l];
    const auto& bj = biases[l];
    if (static_cast<int>(wj.size()) != rows * cols || static_cast<int>(bj.size()) != rows)
      throw ParseError("net: parameter shape mismatch at layer " + std::to_string(l));
    Eigen::MatrixXd w(rows, cols);
    int i = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = wj[static_cast<std::size_t>(i++)].get<double>();
    Eigen::VectorXd b(rows);
    for (int r = 0; r < rows; ++r) b(r) = bj[static_cast<std::size_t>(r)].get<double>();
    if (!w.allFinite() || !b.allFinite()) throw ParseError("net: non-finite parameter");
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

/// Central finite-difference check against backward(). Uses forward passes
/// only, so it stays independent of the reverse-mode path it verifies.
inline double finite_difference_max_rel_error(const DenseNet& net, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& loss_weights,
                                              double eps = 1e-5) {
  ForwardCache cache;
  forward(net, x, &cache);
  Gradients grads;
  backward(net, cache, loss_weights, &grads);

  DenseNet probe = net;
  auto loss_at = [&]() { return loss_weights.dot(forward(probe, x)); };
  double max_rel = 0.0;
  auto check = [&](double analytic, double& param) {
    const double saved = param;
    param = saved + eps;
    const double lp = loss_at();
    param = saved - eps;
    const double lm = loss_at();
    param = saved;
    const double fd = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (int r = 0; r < probe.weights[l].rows(); ++r)
      for (int c = 0; c < probe.weights[l].cols(); ++c)
        check(grads.d_weights[l](r, c), probe.weights[l](r, c));
    for (int r = 0; r < probe.biases[l].size(); ++r)
      check(grads.d_biases[l](r), probe.biases[l](r));
  }
  return max_rel;
}

struct GradcheckReport {
  int nets = 0;
  double max_rel_error_mixed = 0.0;
  double max_rel_error_tanh = 0.0;
  bool pass = false;
};

/// Random small nets (mixed activations and tanh-only) vs central finite
/// differences. Thresholds: 1e-4 mixed, 1e-6 tanh-only.
inline GradcheckReport gradcheck_suite(std::uint64_t seed, int n_nets = 100) {
  GradcheckReport rep;
  rep.nets = n_nets;
  Rng rng(mix_seed({seed, 0x47434b43ull}));  // "GCKC"
  for (int i = 0; i < n_nets; ++i) {
    const bool tanh_only = (i % 2) == 0;
    const int depth = 1 + static_cast<int>(rng.uniform_int(3));  // 1..3 hidden+output layers
    std::vector<int> sizes{2 + static_cast<int>(rng.uniform_int(7))};
    std::vector<Activation> acts;
    for (int l = 0; l < depth; ++l) {
      sizes.push_back(2 + static_cast<int>(rng.uniform_int(15)));
      if (tanh_only) {
        acts.push_back(Activation::Tanh);
      } else {
        const auto pick = rng.uniform_int(3);
        acts.push_back(pick == 0 ? Activation::Tanh
                                 : (pick == 1 ? Activation::Relu : Activation::Linear));
      }
    }
    DenseNet net = init(sizes, acts, rng.next_u64());
    Eigen::VectorXd x(sizes.front());
    for (int r = 0; r < x.size(); ++r) x(r) = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd w(sizes.back());
    for (int r = 0; r < w.size(); ++r) w(r) = rng.uniform(-1.0, 1.0);
    const double rel = finite_difference_max_rel_error(net, x, w);
    if (tanh_only)
      rep.max_rel_error_tanh = std::max(rep.max_rel_error_tanh, rel);
    else
      rep.max_rel_error_mixed = std::max(rep.max_rel_error_mixed, rel);
  }
  rep.pass = rep.max_rel_error_mixed < 1e-4 && rep.max_rel_error_tanh < 1e-6;
  return rep;
}

}  // namespace laesim::nn
