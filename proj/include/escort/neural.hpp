#pragma once

// Small dense feed-forward networks with exact reverse-mode gradients, an
// Adam optimizer and target-network interpolation. Everything is batched:
// a Matrix holds one sample per row.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "escort/core.hpp"

namespace escort {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix row(std::span<const double> v) {
    Matrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.data.begin());
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row_span(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row_span(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class Activation : std::uint8_t { identity = 0, tanh = 1 };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Hidden layers use tanh; the output layer uses `output`.
struct MlpParams {
  std::vector<std::size_t> sizes;
  std::vector<DenseLayer> layers;
  Activation output = Activation::identity;

  std::size_t input_size() const { return sizes.front(); }
  std::size_t output_size() const { return sizes.back(); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Post-activation values of every layer; activations[0] is the input.
struct ForwardCache {
  std::vector<Matrix> activations;
};

struct GradBundle {
  std::vector<DenseLayer> layers;  // shape-mirrors MlpParams::layers
  Matrix input;                    // d loss / d input, one row per sample
};

inline bool same_shape(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].in != b[i].in || a[i].out != b[i].out || a[i].weights.size() != b[i].weights.size() ||
        a[i].bias.size() != b[i].bias.size())
      return false;
  return true;
}

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
inline MlpParams init_mlp(std::vector<std::size_t> sizes, Activation output, std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("network.layers", "need at least an input and an output layer");
  for (std::size_t s : sizes)
    if (s == 0) throw ConfigError("network.layers", "layer sizes must be positive");
  Rng rng(seed);
  MlpParams p;
  p.sizes = std::move(sizes);
  p.output = output;
  for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    DenseLayer layer{p.sizes[l], p.sizes[l + 1], {}, {}};
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.bias.assign(layer.out, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace detail {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutVecMap = Eigen::Map<Eigen::RowVectorXd>;

inline ConstMap view(const Matrix& m) { return {m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)}; }
inline MutMap view(Matrix& m) { return {m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)}; }
inline ConstMap weights(const DenseLayer& l) {
  return {l.weights.data(), static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in)};
}
inline bool squashes(const MlpParams& p, std::size_t layer) {
  return layer + 1 < p.layers.size() || p.output == Activation::tanh;
}
}  // namespace detail

inline Matrix forward(const MlpParams& params, const Matrix& input, ForwardCache* cache = nullptr) {
  if (input.cols != params.input_size()) throw ContractViolation("forward: input width differs from first layer size");
  if (cache) {
    cache->activations.resize(params.layers.size() + 1);
    cache->activations[0] = input;
  }
  Matrix x = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    Matrix y(x.rows, layer.out);
    auto ym = detail::view(y);
    ym.noalias() = detail::view(x) * detail::weights(layer).transpose();
    ym.rowwise() += detail::ConstVecMap(layer.bias.data(), static_cast<Eigen::Index>(layer.out));
    if (detail::squashes(params, l))
      for (double& v : y.data) v = std::tanh(v);
    if (cache) cache->activations[l + 1] = y;
    x = std::move(y);
  }
  return x;
}

inline std::vector<double> forward(const MlpParams& params, std::span<const double> input) {
  return forward(params, Matrix::row(input)).data;
}

/// Parameter gradients are summed over the batch rows of `output_grad`.
inline GradBundle backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad) {
  const std::size_t n_layers = params.layers.size();
  if (cache.activations.size() != n_layers + 1) throw ContractViolation("backward: cache does not match network depth");
  const std::size_t rows = cache.activations.front().rows;
  for (std::size_t l = 0; l <= n_layers; ++l)
    if (cache.activations[l].cols != params.sizes[l] || cache.activations[l].rows != rows)
      throw ContractViolation("backward: cache does not match network shape");
  if (output_grad.rows != rows || output_grad.cols != params.output_size())
    throw ContractViolation("backward: output gradient shape mismatch");

  GradBundle g;
  g.layers.resize(n_layers);
  Matrix delta = output_grad;
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    const Matrix& x = cache.activations[l];
    const Matrix& y = cache.activations[l + 1];
    if (detail::squashes(params, l))
      for (std::size_t k = 0; k < delta.data.size(); ++k) delta.data[k] *= 1.0 - y.data[k] * y.data[k];

    DenseLayer& gl = g.layers[l];
    gl.in = layer.in;
    gl.out = layer.out;
    gl.weights.resize(layer.weights.size());
    gl.bias.resize(layer.out);
    const auto dm = detail::view(std::as_const(delta));
    detail::MutMap(gl.weights.data(), static_cast<Eigen::Index>(layer.out), static_cast<Eigen::Index>(layer.in)).noalias() =
        dm.transpose() * detail::view(x);
    detail::MutVecMap(gl.bias.data(), static_cast<Eigen::Index>(layer.out)) = dm.colwise().sum();
    Matrix dx(rows, layer.in);
    detail::view(dx).noalias() = dm * detail::weights(layer);
    delta = std::move(dx);
  }
  g.input = std::move(delta);
  return g;
}

inline double global_norm(const GradBundle& g) {
  double sq = 0.0;
  for (const DenseLayer& l : g.layers) {
    for (double v : l.weights) sq += v * v;
    for (double v : l.bias) sq += v * v;
  }
  return std::sqrt(sq);
}

/// Rescales parameter gradients so their joint L2 norm is at most max_norm.
inline void clip_global_norm(GradBundle& g, double max_norm) {
  const double n = global_norm(g);
  if (!(n > max_norm)) return;
  const double s = max_norm / n;
  for (DenseLayer& l : g.layers) {
    for (double& v : l.weights) v *= s;
    for (double& v : l.bias) v *= s;
  }
}

struct AdamHyper {
  double step_size = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<DenseLayer> first;   // moment accumulators, shaped like the params
  std::vector<DenseLayer> second;

  friend bool operator==(const OptState& a, const OptState& b) {
    return a.hyper.step_size == b.hyper.step_size && a.hyper.beta1 == b.hyper.beta1 && a.hyper.beta2 == b.hyper.beta2 &&
           a.hyper.epsilon == b.hyper.epsilon && a.step == b.step && a.first == b.first && a.second == b.second;
  }
};

inline OptState make_opt_state(const MlpParams& params, AdamHyper hyper = {}) {
  OptState s;
  s.hyper = hyper;
  for (const DenseLayer& l : params.layers) {
    DenseLayer z{l.in, l.out, std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)};
    s.first.push_back(z);
    s.second.push_back(std::move(z));
  }
  return s;
}

/// One bias-corrected Adam descent step, in place.
inline void opt_step(MlpParams& params, const GradBundle& grads, OptState& state) {
  if (!same_shape(params.layers, grads.layers) || !same_shape(params.layers, state.first) ||
      !same_shape(params.layers, state.second))
    throw ContractViolation("opt_step: parameter, gradient and optimizer shapes differ");
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      p[k] -= h.step_size * (m[k] / c1) / (std::sqrt(v[k] / c2) + h.epsilon);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads.layers[l].weights, state.first[l].weights, state.second[l].weights);
    update(params.layers[l].bias, grads.layers[l].bias, state.first[l].bias, state.second[l].bias);
  }
}

/// target <- (1 - tau) * target + tau * source, elementwise.
inline void soft_update(MlpParams& target, const MlpParams& source, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractViolation("soft_update: tau must lie in [0, 1]");
  if (target.sizes != source.sizes || !same_shape(target.layers, source.layers))
    throw ContractViolation("soft_update: shape mismatch");
  if (tau == 1.0) {
    target.layers = source.layers;
    return;
  }
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    auto blend = [tau](std::vector<double>& t, const std::vector<double>& s) {
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = (1.0 - tau) * t[k] + tau * s[k];
    };
    blend(target.layers[l].weights, source.layers[l].weights);
    blend(target.layers[l].bias, source.layers[l].bias);
  }
}

}  // namespace escort
