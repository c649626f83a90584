#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfglyph/errors.hpp"
#include "cfglyph/rng.hpp"

namespace cfglyph {

// ─── Dense networks ──────────────────────────────────────────────────────────
//
// Plain fully connected nets with manual backprop. All heavy loops run over
// whole batches as row-major matrix products, which is what keeps training on
// a single core inside the pipeline budget. Accumulation order is fixed, so a
// seeded run is reproducible to the bit.

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

enum class Activation { Linear, LeakyRelu, Sigmoid, Softmax };

inline constexpr double kLeakySlope = 0.1;

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "linear") return Activation::Linear;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "softmax") return Activation::Softmax;
  throw FormatError("unknown activation '" + s + "'");
}

struct Layer {
  Matrix w;                // out x in
  std::vector<double> b;   // out
  Activation act = Activation::Linear;
};

struct NeuralNet {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().w.cols; }
  std::size_t output_dim() const { return layers.back().w.rows; }
};

/// Builds a net with truncated-normal weights (resampled beyond two standard
/// deviations) and zero biases.
inline NeuralNet make_net(const std::vector<std::size_t>& dims,
                          const std::vector<Activation>& acts, Rng& rng,
                          double init_std = 0.01) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw ConfigError("make_net needs n+1 dims for n activations");
  NeuralNet net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.w = Matrix(dims[l + 1], dims[l]);
    layer.b.assign(dims[l + 1], 0.0);
    layer.act = acts[l];
    for (double& v : layer.w.data) {
      double draw;
      do {
        draw = init_std * rng.normal();
      } while (std::abs(draw) > 2.0 * init_std);
      v = draw;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace detail {

inline void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::Linear:
      break;
    case Activation::LeakyRelu:
      for (double& v : z.data) v = v > 0.0 ? v : kLeakySlope * v;
      break;
    case Activation::Sigmoid:
      for (double& v : z.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::Softmax:
      for (std::size_t r = 0; r < z.rows; ++r) {
        double* row = z.row(r);
        double mx = row[0];
        for (std::size_t c = 1; c < z.cols; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < z.cols; ++c) {
          row[c] = std::exp(row[c] - mx);
          sum += row[c];
        }
        for (std::size_t c = 0; c < z.cols; ++c) row[c] /= sum;
      }
      break;
  }
}

/// dL/dz from dL/dy given the activation output y (all four activations are
/// expressible from their outputs; softmax needs the full per-row Jacobian).
inline void activation_backward(Activation act, const Matrix& y, Matrix& dy) {
  switch (act) {
    case Activation::Linear:
      break;
    case Activation::LeakyRelu:
      // y > 0 iff z > 0; the kink itself takes the leaky slope.
      for (std::size_t i = 0; i < y.data.size(); ++i)
        if (y.data[i] <= 0.0) dy.data[i] *= kLeakySlope;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < y.data.size(); ++i)
        dy.data[i] *= y.data[i] * (1.0 - y.data[i]);
      break;
    case Activation::Softmax:
      for (std::size_t r = 0; r < y.rows; ++r) {
        const double* yr = y.row(r);
        double* dr = dy.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols; ++c) dot += dr[c] * yr[c];
        for (std::size_t c = 0; c < y.cols; ++c) dr[c] = yr[c] * (dr[c] - dot);
      }
      break;
  }
}

}  // namespace detail

struct ForwardCache {
  // activations[0] is the input batch; activations[l+1] the output of layer l
  std::vector<Matrix> activations;

  const Matrix& output() const { return activations.back(); }
};

inline ForwardCache forward_batch(const NeuralNet& net, const Matrix& x) {
  if (x.cols != net.input_dim())
    throw DimensionError("input has " + std::to_string(x.cols) + " features, net expects " +
                         std::to_string(net.input_dim()));
  ForwardCache cache;
  cache.activations.reserve(net.layers.size() + 1);
  cache.activations.push_back(x);
  for (const Layer& layer : net.layers) {
    const Matrix& in = cache.activations.back();
    Matrix z(in.rows, layer.w.rows);
    for (std::size_t r = 0; r < in.rows; ++r) {
      const double* xr = in.row(r);
      double* zr = z.row(r);
      for (std::size_t o = 0; o < layer.w.rows; ++o) {
        const double* wr = layer.w.row(o);
        double acc = layer.b[o];
        for (std::size_t k = 0; k < layer.w.cols; ++k) acc += wr[k] * xr[k];
        zr[o] = acc;
      }
    }
    detail::apply_activation(layer.act, z);
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

/// Single-sample convenience wrapper.
inline std::vector<double> forward(const NeuralNet& net, const std::vector<double>& x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  const ForwardCache cache = forward_batch(net, m);
  return cache.output().data;
}

struct Gradients {
  std::vector<Matrix> dw;
  std::vector<std::vector<double>> db;
};

/// Backpropagates dL/d(output) through the cached forward pass. Returns the
/// parameter gradients and, through dx, the gradient at the input batch (used
/// when two nets are chained).
inline Gradients backward_batch(const NeuralNet& net, const ForwardCache& cache,
                                Matrix dout, Matrix* dx = nullptr) {
  Gradients g;
  g.dw.resize(net.layers.size());
  g.db.resize(net.layers.size());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Matrix& in = cache.activations[li];
    const Matrix& out = cache.activations[li + 1];
    detail::activation_backward(layer.act, out, dout);  // dout is now dL/dz

    g.dw[li] = Matrix(layer.w.rows, layer.w.cols);
    g.db[li].assign(layer.w.rows, 0.0);
    for (std::size_t r = 0; r < in.rows; ++r) {
      const double* xr = in.row(r);
      const double* dz = dout.row(r);
      for (std::size_t o = 0; o < layer.w.rows; ++o) {
        const double d = dz[o];
        if (d == 0.0) continue;
        g.db[li][o] += d;
        double* dwr = g.dw[li].row(o);
        for (std::size_t k = 0; k < layer.w.cols; ++k) dwr[k] += d * xr[k];
      }
    }

    if (li > 0 || dx != nullptr) {
      Matrix dprev(in.rows, layer.w.cols);
      for (std::size_t r = 0; r < in.rows; ++r) {
        const double* dz = dout.row(r);
        double* dp = dprev.row(r);
        for (std::size_t o = 0; o < layer.w.rows; ++o) {
          const double d = dz[o];
          if (d == 0.0) continue;
          const double* wr = layer.w.row(o);
          for (std::size_t k = 0; k < layer.w.cols; ++k) dp[k] += d * wr[k];
        }
      }
      if (li == 0 && dx != nullptr) *dx = std::move(dprev);
      else dout = std::move(dprev);
    }
  }
  return g;
}

// ─── Losses ──────────────────────────────────────────────────────────────────
//
// Each loss returns its mean value and writes dL/d(pred) into grad. Means are
// over every element of the batch, so gradients already carry the 1/(n*d)
// factor.

namespace detail {

inline void check_same_shape(const Matrix& pred, const Matrix& target) {
  if (pred.rows != target.rows || pred.cols != target.cols)
    throw DimensionError("prediction is " + std::to_string(pred.rows) + "x" +
                         std::to_string(pred.cols) + " but target is " +
                         std::to_string(target.rows) + "x" + std::to_string(target.cols));
}

}  // namespace detail

inline double mse_loss(const Matrix& pred, const Matrix& target, Matrix* grad = nullptr) {
  detail::check_same_shape(pred, target);
  const double inv = 1.0 / static_cast<double>(pred.data.size());
  if (grad) *grad = Matrix(pred.rows, pred.cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    loss += d * d;
    if (grad) grad->data[i] = 2.0 * d * inv;
  }
  return loss * inv;
}

inline double mae_loss(const Matrix& pred, const Matrix& target, Matrix* grad = nullptr) {
  detail::check_same_shape(pred, target);
  const double inv = 1.0 / static_cast<double>(pred.data.size());
  if (grad) *grad = Matrix(pred.rows, pred.cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    loss += std::abs(d);
    if (grad) grad->data[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv;
  }
  return loss * inv;
}

/// Binary cross-entropy on probabilities, clamped away from 0 and 1 for
/// finiteness; the gradient is zero where the clamp is active.
inline double bce_loss(const Matrix& pred, const Matrix& target, Matrix* grad = nullptr) {
  detail::check_same_shape(pred, target);
  constexpr double kClamp = 1e-7;
  const double inv = 1.0 / static_cast<double>(pred.data.size());
  if (grad) *grad = Matrix(pred.rows, pred.cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double p = std::clamp(pred.data[i], kClamp, 1.0 - kClamp);
    const double t = target.data[i];
    loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    if (grad)
      grad->data[i] = (pred.data[i] > kClamp && pred.data[i] < 1.0 - kClamp)
                          ? (p - t) / (p * (1.0 - p)) * inv
                          : 0.0;
  }
  return loss * inv;
}

/// Cross-entropy on softmax outputs against integer class targets; the mean
/// is over rows. Composed with the softmax Jacobian in backward_batch this
/// yields the usual (prob - onehot) / n update.
inline double softmax_xent_loss(const Matrix& probs, const std::vector<int>& classes,
                                Matrix* grad = nullptr) {
  if (probs.rows != classes.size())
    throw DimensionError("class target count does not match batch");
  const double inv = 1.0 / static_cast<double>(probs.rows);
  if (grad) *grad = Matrix(probs.rows, probs.cols);
  double loss = 0.0;
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double p = std::max(probs(r, static_cast<std::size_t>(classes[r])), 1e-12);
    loss -= std::log(p);
    if (grad) (*grad)(r, static_cast<std::size_t>(classes[r])) = -inv / p;
  }
  return loss * inv;
}

// ─── Adam ────────────────────────────────────────────────────────────────────

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<std::vector<double>> m_b, v_b;
  long step = 0;

  static AdamState for_net(const NeuralNet& net) {
    AdamState s;
    for (const Layer& layer : net.layers) {
      s.m_w.emplace_back(layer.w.rows, layer.w.cols);
      s.v_w.emplace_back(layer.w.rows, layer.w.cols);
      s.m_b.emplace_back(layer.b.size(), 0.0);
      s.v_b.emplace_back(layer.b.size(), 0.0);
    }
    return s;
  }
};

/// One bias-corrected Adam update over all parameters.
inline void adam_step(NeuralNet& net, const Gradients& g, AdamState& state,
                      const AdamConfig& config = {}) {
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const auto update = [&](double& param, double grad, double& m, double& v) {
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad * grad;
    param -= config.lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Layer& layer = net.layers[l];
    for (std::size_t i = 0; i < layer.w.data.size(); ++i)
      update(layer.w.data[i], g.dw[l].data[i], state.m_w[l].data[i], state.v_w[l].data[i]);
    for (std::size_t i = 0; i < layer.b.size(); ++i)
      update(layer.b[i], g.db[l][i], state.m_b[l][i], state.v_b[l][i]);
  }
}

inline bool net_all_finite(const NeuralNet& net) {
  for (const Layer& layer : net.layers) {
    for (double v : layer.w.data)
      if (!std::isfinite(v)) return false;
    for (double v : layer.b)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

// ─── Serialization ───────────────────────────────────────────────────────────

inline nlohmann::ordered_json net_to_json(const NeuralNet& net) {
  nlohmann::ordered_json out;
  out["version"] = "nn-1";
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const Layer& layer : net.layers) {
    nlohmann::ordered_json j;
    j["in"] = layer.w.cols;
    j["out"] = layer.w.rows;
    j["activation"] = activation_name(layer.act);
    j["W"] = layer.w.data;
    j["b"] = layer.b;
    layers.push_back(std::move(j));
  }
  out["layers"] = std::move(layers);
  return out;
}

inline NeuralNet net_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("version", "") != std::string("nn-1"))
    throw FormatError("net file must declare version nn-1");
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
    throw FormatError("net file needs a non-empty 'layers' array");
  NeuralNet net;
  for (const auto& jl : j["layers"]) {
    Layer layer;
    const std::size_t in = jl.at("in").get<std::size_t>();
    const std::size_t out = jl.at("out").get<std::size_t>();
    layer.act = activation_from_name(jl.at("activation").get<std::string>());
    layer.w = Matrix(out, in);
    const auto w = jl.at("W").get<std::vector<double>>();
    if (w.size() != out * in) throw FormatError("layer weight count mismatch");
    layer.w.data = w;
    layer.b = jl.at("b").get<std::vector<double>>();
    if (layer.b.size() != out) throw FormatError("layer bias count mismatch");
    if (!net.layers.empty() && net.layers.back().w.rows != in)
      throw FormatError("layer input does not match previous layer output");
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace cfglyph
