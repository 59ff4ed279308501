#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include "streamrl/common.hpp"

namespace streamrl {

enum class Activation { LeakyRelu, Relu, Tanh };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::LeakyRelu: return "leaky-relu";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "leaky-relu") return Activation::LeakyRelu;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation: " + s);
}

// Fully-connected value network: hidden layers with optional LayerNorm
// (applied after the linear map, before the activation), and a linear output
// head of width `actions * atoms_per_action`. atoms_per_action == 1 is the
// scalar q-head; larger values carry per-action distributions.
struct NetworkSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int actions = 0;
  int atoms_per_action = 1;
  std::vector<bool> layer_norm;  // one flag per hidden layer
  double sparsity = 0.9;
  Activation activation = Activation::LeakyRelu;

  int output_dim() const { return actions * atoms_per_action; }

  void validate() const {
    if (input_dim <= 0) throw ConfigError("NetworkSpec: input_dim must be positive");
    if (actions <= 0) throw ConfigError("NetworkSpec: actions must be positive");
    if (atoms_per_action < 1) throw ConfigError("NetworkSpec: atoms_per_action must be >= 1");
    for (int h : hidden_dims)
      if (h <= 0) throw ConfigError("NetworkSpec: hidden dims must be positive");
    if (!(sparsity >= 0.0 && sparsity < 1.0))
      throw ConfigError("NetworkSpec: sparsity must lie in [0, 1)");
    if (layer_norm.size() != hidden_dims.size())
      throw ConfigError("NetworkSpec: layer_norm needs one flag per hidden layer");
  }
};

inline NetworkSpec make_mlp_spec(int input_dim, std::vector<int> hidden, int actions,
                                 int atoms = 1, bool layer_norm = true,
                                 double sparsity = 0.9,
                                 Activation act = Activation::LeakyRelu) {
  NetworkSpec s;
  s.input_dim = input_dim;
  s.hidden_dims = std::move(hidden);
  s.actions = actions;
  s.atoms_per_action = atoms;
  s.layer_norm.assign(s.hidden_dims.size(), layer_norm);
  s.sparsity = sparsity;
  s.activation = act;
  return s;
}

namespace detail {

// Offsets of one layer's blocks inside the flat ParamVector.
struct LayerLayout {
  int in = 0, out = 0;
  bool norm = false;        // LayerNorm between linear map and activation
  bool hidden = false;      // hidden layers get the activation
  std::size_t w = 0, b = 0, gain = 0, shift = 0;
};

inline std::vector<LayerLayout> layer_layouts(const NetworkSpec& spec) {
  std::vector<LayerLayout> layers;
  std::size_t off = 0;
  int in = spec.input_dim;
  for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
    LayerLayout lay;
    lay.in = in;
    lay.out = spec.hidden_dims[l];
    lay.norm = spec.layer_norm[l];
    lay.hidden = true;
    lay.w = off;
    off += static_cast<std::size_t>(lay.in) * lay.out;
    lay.b = off;
    off += lay.out;
    if (lay.norm) {
      lay.gain = off;
      off += lay.out;
      lay.shift = off;
      off += lay.out;
    }
    layers.push_back(lay);
    in = lay.out;
  }
  LayerLayout head;
  head.in = in;
  head.out = spec.output_dim();
  head.w = off;
  off += static_cast<std::size_t>(head.in) * head.out;
  head.b = off;
  off += head.out;
  layers.push_back(head);
  return layers;
}

inline std::uint64_t hash_params(const ParamVector& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : p) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

constexpr double kLayerNormEps = 1e-5;
constexpr double kLeakySlope = 0.01;

inline double activate(Activation a, double y) {
  switch (a) {
    case Activation::LeakyRelu: return y > 0.0 ? y : kLeakySlope * y;
    case Activation::Relu: return y > 0.0 ? y : 0.0;
    case Activation::Tanh: return std::tanh(y);
  }
  return y;
}

inline double activate_grad(Activation a, double y, double fy) {
  switch (a) {
    case Activation::LeakyRelu: return y > 0.0 ? 1.0 : kLeakySlope;
    case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - fy * fy;
  }
  return 1.0;
}

}  // namespace detail

inline std::size_t param_count(const NetworkSpec& spec) {
  spec.validate();
  auto layers = detail::layer_layouts(spec);
  const auto& last = layers.back();
  return last.b + static_cast<std::size_t>(last.out);
}

// Everything one reverse pass needs, valid only for the exact (params, input)
// pair that produced it.
struct ForwardCache {
  struct Layer {
    std::vector<double> input;    // activations entering the layer
    std::vector<double> pre;      // linear output, before LayerNorm
    std::vector<double> xhat;     // normalized pre (LayerNorm layers only)
    double inv_std = 0.0;
    std::vector<double> act_in;   // activation input (post-LayerNorm)
    std::vector<double> out;      // layer output
  };
  std::vector<Layer> layers;
  std::size_t params_size = 0;
  std::uint64_t params_hash = 0;
};

// Uniform fan-in-scaled init (bound 1/sqrt(fan_in)) with a fixed fraction of
// each unit's incoming weights zeroed; biases zero, LayerNorm gains 1 and
// shifts 0. Deterministic in seed.
inline ParamVector init_sparse(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params(param_count(spec), 0.0);
  Rng rng(seed_stream(seed, "init"));
  auto layers = detail::layer_layouts(spec);
  std::vector<int> index;
  for (const auto& lay : layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(lay.in));
    const int zeros = static_cast<int>(std::floor(spec.sparsity * lay.in));
    index.resize(lay.in);
    for (int u = 0; u < lay.out; ++u) {
      double* row = params.data() + lay.w + static_cast<std::size_t>(u) * lay.in;
      for (int i = 0; i < lay.in; ++i) row[i] = rng.uniform(-bound, bound);
      std::iota(index.begin(), index.end(), 0);
      for (int k = 0; k < zeros; ++k) {  // partial Fisher-Yates
        int j = k + rng.below_int(lay.in - k);
        std::swap(index[k], index[j]);
        row[index[k]] = 0.0;
      }
    }
    if (lay.norm)
      for (int u = 0; u < lay.out; ++u) params[lay.gain + u] = 1.0;
  }
  return params;
}

// Evaluates the network. For atoms_per_action > 1 the outputs are raw logits
// (or quantile locations); any softmax is applied downstream.
inline std::vector<double> forward(const NetworkSpec& spec, const ParamVector& params,
                                   const std::vector<double>& obs, ForwardCache& cache) {
  spec.validate();
  if (static_cast<int>(obs.size()) != spec.input_dim)
    throw UsageError("forward: observation has " + std::to_string(obs.size()) +
                     " dims, spec wants " + std::to_string(spec.input_dim));
  if (params.size() != param_count(spec))
    throw UsageError("forward: params length does not match spec");

  auto layers = detail::layer_layouts(spec);
  cache.layers.assign(layers.size(), {});
  cache.params_size = params.size();
  cache.params_hash = detail::hash_params(params);

  std::vector<double> x = obs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lay = layers[l];
    auto& c = cache.layers[l];
    c.input = x;
    c.pre.assign(lay.out, 0.0);
    for (int u = 0; u < lay.out; ++u) {
      const double* row = params.data() + lay.w + static_cast<std::size_t>(u) * lay.in;
      double acc = params[lay.b + u];
      for (int i = 0; i < lay.in; ++i) acc += row[i] * x[i];
      c.pre[u] = acc;
    }
    if (lay.norm) {
      double mu = 0.0;
      for (double a : c.pre) mu += a;
      mu /= lay.out;
      double var = 0.0;
      for (double a : c.pre) var += (a - mu) * (a - mu);
      var /= lay.out;
      c.inv_std = 1.0 / std::sqrt(var + detail::kLayerNormEps);
      c.xhat.resize(lay.out);
      c.act_in.resize(lay.out);
      for (int u = 0; u < lay.out; ++u) {
        c.xhat[u] = (c.pre[u] - mu) * c.inv_std;
        c.act_in[u] = params[lay.gain + u] * c.xhat[u] + params[lay.shift + u];
      }
    } else {
      c.act_in = c.pre;
    }
    if (lay.hidden) {
      c.out.resize(lay.out);
      for (int u = 0; u < lay.out; ++u)
        c.out[u] = detail::activate(spec.activation, c.act_in[u]);
    } else {
      c.out = c.act_in;
    }
    if (!all_finite(c.out))
      throw NumericFault("forward: non-finite activation in layer", static_cast<long>(l));
    x = c.out;
  }
  return x;
}

inline std::vector<double> forward(const NetworkSpec& spec, const ParamVector& params,
                                   const std::vector<double>& obs) {
  ForwardCache cache;
  return forward(spec, params, obs, cache);
}

// Reverse pass: returns d(output_grad . outputs)/d(params) as a flat vector.
// With output_grad = dLoss/dOutputs this is the objective gradient; with a
// one-hot output_grad it is the sensitivity of a single head entry.
inline ParamVector backward(const NetworkSpec& spec, const ParamVector& params,
                            const ForwardCache& cache,
                            const std::vector<double>& output_grad) {
  spec.validate();
  if (cache.params_size != params.size() ||
      cache.params_hash != detail::hash_params(params))
    throw UsageError("backward: cache is stale for these params");
  if (static_cast<int>(output_grad.size()) != spec.output_dim())
    throw UsageError("backward: output_grad size does not match head");

  auto layers = detail::layer_layouts(spec);
  ParamVector grad(params.size(), 0.0);

  std::vector<double> d = output_grad;  // gradient w.r.t. current layer output
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& lay = layers[li];
    const auto& c = cache.layers[li];

    std::vector<double> da(lay.out);  // gradient w.r.t. linear output `pre`
    if (lay.hidden) {
      for (int u = 0; u < lay.out; ++u)
        d[u] *= detail::activate_grad(spec.activation, c.act_in[u], c.out[u]);
    }
    if (lay.norm) {
      double mean_dx = 0.0, mean_dx_xhat = 0.0;
      std::vector<double> dxhat(lay.out);
      for (int u = 0; u < lay.out; ++u) {
        grad[lay.gain + u] += d[u] * c.xhat[u];
        grad[lay.shift + u] += d[u];
        dxhat[u] = d[u] * params[lay.gain + u];
        mean_dx += dxhat[u];
        mean_dx_xhat += dxhat[u] * c.xhat[u];
      }
      mean_dx /= lay.out;
      mean_dx_xhat /= lay.out;
      for (int u = 0; u < lay.out; ++u)
        da[u] = c.inv_std * (dxhat[u] - mean_dx - c.xhat[u] * mean_dx_xhat);
    } else {
      da = d;
    }

    std::vector<double> dx(lay.in, 0.0);
    for (int u = 0; u < lay.out; ++u) {
      const double* row = params.data() + lay.w + static_cast<std::size_t>(u) * lay.in;
      double* grow = grad.data() + lay.w + static_cast<std::size_t>(u) * lay.in;
      grad[lay.b + u] += da[u];
      for (int i = 0; i < lay.in; ++i) {
        grow[i] += da[u] * c.input[i];
        dx[i] += row[i] * da[u];
      }
    }
    d = std::move(dx);
  }
  return grad;
}

// Widens the final hidden layer so the total parameter count is the largest
// achievable value not exceeding `target_param_count`. Used to equalize a
// scalar-head network's capacity against a distributional A*K head.
inline NetworkSpec matched_hidden_width(const NetworkSpec& base,
                                        std::size_t target_param_count) {
  base.validate();
  if (base.hidden_dims.empty())
    throw ConfigError("matched_hidden_width: spec has no hidden layer to scale");
  auto count_with = [&](int h) {
    NetworkSpec s = base;
    s.hidden_dims.back() = h;
    return param_count(s);
  };
  const std::size_t c1 = count_with(1);
  const std::size_t per_unit = count_with(2) - c1;
  if (c1 > target_param_count)
    throw ConfigError("matched_hidden_width: target below minimal spec size");
  std::size_t h = 1 + (target_param_count - c1) / per_unit;
  NetworkSpec out = base;
  out.hidden_dims.back() = static_cast<int>(h);
  return out;
}

}  // namespace streamrl
