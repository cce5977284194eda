#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sdprune/errors.hpp"
#include "sdprune/grouping.hpp"
#include "sdprune/linalg.hpp"
#include "sdprune/rng.hpp"

namespace sdprune {

enum class ModelKind { quadratic, linear_regression, mlp };
enum class Activation { relu, tanh, identity };
enum class LossKind { mse, softmax_cross_entropy };

/// N x in_dim inputs paired with either regression targets or class indices.
struct Dataset {
  std::vector<Vec> inputs;
  std::vector<Vec> targets;              // regression targets (may be empty)
  std::vector<std::size_t> class_labels; // classification labels (may be empty)
  std::string name;

  std::size_t size() const { return inputs.size(); }
  std::size_t in_dim() const { return inputs.empty() ? 0 : inputs[0].size(); }
  bool is_classification() const { return !class_labels.empty(); }

  void validate(std::size_t out_dim) const {
    if (inputs.empty()) throw ConfigError("dataset: needs at least one sample");
    if (is_classification()) {
      if (class_labels.size() != inputs.size())
        throw DimensionError("dataset: label count != input count");
      for (std::size_t c : class_labels)
        if (c >= out_dim) throw ConfigError("dataset: class index out of range");
    } else {
      if (targets.size() != inputs.size())
        throw DimensionError("dataset: target count != input count");
    }
  }
};

using Batch = std::vector<std::size_t>;

inline Batch full_batch(const Dataset& data) {
  Batch b(data.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
  return b;
}

struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  std::vector<std::size_t> layer_sizes;  // mlp: [in, hidden..., out]
  Activation activation = Activation::tanh;
  LossKind loss = LossKind::mse;
  // quadratic: data baked into the model, loss(w) = (1/2N)||Xw - y||^2
  std::vector<Vec> quadratic_x;
  Vec quadratic_y;

  std::size_t in_dim() const {
    switch (kind) {
      case ModelKind::quadratic: return quadratic_x.empty() ? 0 : quadratic_x[0].size();
      case ModelKind::linear_regression:
      case ModelKind::mlp: return layer_sizes.front();
    }
    return 0;
  }

  std::size_t out_dim() const {
    if (kind == ModelKind::quadratic) return 1;
    return layer_sizes.back();
  }

  ParamLayout layout() const {
    ParamLayout pl;
    switch (kind) {
      case ModelKind::quadratic:
        pl.layers.push_back({in_dim(), 1, false});
        break;
      case ModelKind::linear_regression:
        pl.layers.push_back({layer_sizes.at(0), layer_sizes.at(1), false});
        break;
      case ModelKind::mlp:
        for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i)
          pl.layers.push_back({layer_sizes[i], layer_sizes[i + 1], true});
        break;
    }
    return pl;
  }

  std::size_t param_count() const { return layout().total(); }

  void validate() const {
    switch (kind) {
      case ModelKind::quadratic:
        if (quadratic_x.empty()) throw ConfigError("quadratic model: X is empty");
        if (quadratic_y.size() != quadratic_x.size())
          throw DimensionError("quadratic model: X/y row counts differ");
        break;
      case ModelKind::linear_regression:
        if (layer_sizes.size() != 2) throw ConfigError("linear_regression: needs [in, out]");
        break;
      case ModelKind::mlp:
        if (layer_sizes.size() < 3) throw ConfigError("mlp: needs at least one hidden layer");
        for (std::size_t s : layer_sizes)
          if (s == 0) throw ConfigError("mlp: layer sizes must be >= 1");
        break;
    }
  }
};

namespace detail {

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

// derivative in terms of the pre-activation z; relu' at 0 is 0
inline double activate_deriv(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

struct ForwardTrace {
  std::vector<Vec> activations;      // per layer input, starting with x
  std::vector<Vec> preactivations;   // per layer z
};

inline Vec mlp_forward(const ModelSpec& model, const Vec& w, const Vec& x, ForwardTrace* trace) {
  const ParamLayout pl = model.layout();
  Vec a = x;
  if (trace) trace->activations.push_back(a);
  std::size_t off = 0;
  for (std::size_t li = 0; li < pl.layers.size(); ++li) {
    const LayerShape& ls = pl.layers[li];
    Vec z(ls.out, 0.0);
    for (std::size_t o = 0; o < ls.out; ++o) {
      double s = ls.has_bias ? w[off + ls.out * ls.in + o] : 0.0;
      const double* row = w.data() + off + o * ls.in;
      for (std::size_t i = 0; i < ls.in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    const bool last = (li + 1 == pl.layers.size());
    Vec out(ls.out);
    for (std::size_t o = 0; o < ls.out; ++o)
      out[o] = last ? z[o] : activate(model.activation, z[o]);
    if (trace) {
      trace->preactivations.push_back(z);
      trace->activations.push_back(out);
    }
    a = std::move(out);
    off += ls.size();
  }
  return a;
}

// Per-sample loss and the gradient of the loss w.r.t. the network output.
inline double output_loss(const ModelSpec& model, const Vec& h, const Dataset& data,
                          std::size_t sample, Vec* dh) {
  if (model.loss == LossKind::softmax_cross_entropy) {
    double zmax = h[0];
    for (double v : h) zmax = std::max(zmax, v);
    double denom = 0.0;
    for (double v : h) denom += std::exp(v - zmax);
    std::size_t y = data.class_labels[sample];
    double logp = (h[y] - zmax) - std::log(denom);
    if (dh) {
      dh->assign(h.size(), 0.0);
      for (std::size_t k = 0; k < h.size(); ++k)
        (*dh)[k] = std::exp(h[k] - zmax) / denom;
      (*dh)[y] -= 1.0;
    }
    return -logp;
  }
  // mse: (1/2)||h - y||^2 per sample
  const Vec& y = data.targets[sample];
  if (y.size() != h.size()) throw DimensionError("loss: target/output dims differ");
  double s = 0.0;
  if (dh) dh->assign(h.size(), 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    double r = h[k] - y[k];
    s += r * r;
    if (dh) (*dh)[k] = r;
  }
  return 0.5 * s;
}

}  // namespace detail

/// Mean loss over a batch.
inline double loss(const ModelSpec& model, const Vec& w, const Dataset& data, const Batch& batch) {
  if (w.size() != model.param_count()) throw DimensionError("loss: parameter count mismatch");
  if (batch.empty()) throw ConfigError("loss: empty batch");
  if (model.kind == ModelKind::quadratic) {
    double s = 0.0;
    for (std::size_t i : batch) {
      double r = dot(model.quadratic_x[i], w) - model.quadratic_y[i];
      s += r * r;
    }
    return 0.5 * s / static_cast<double>(batch.size());
  }
  if (model.kind == ModelKind::linear_regression) {
    double s = 0.0;
    const std::size_t out = model.layer_sizes[1];
    const std::size_t in = model.layer_sizes[0];
    for (std::size_t i : batch) {
      for (std::size_t o = 0; o < out; ++o) {
        double h = 0.0;
        for (std::size_t k = 0; k < in; ++k) h += w[o * in + k] * data.inputs[i][k];
        double r = h - data.targets[i][o];
        s += r * r;
      }
    }
    return 0.5 * s / static_cast<double>(batch.size());
  }
  double total = 0.0;
  for (std::size_t i : batch) {
    Vec h = detail::mlp_forward(model, w, data.inputs[i], nullptr);
    total += detail::output_loss(model, h, data, i, nullptr);
  }
  double mean = total / static_cast<double>(batch.size());
  if (!std::isfinite(mean)) throw NumericError("loss: non-finite value");
  return mean;
}

/// Exact reverse-mode gradient of the mean batch loss.
inline Vec grad(const ModelSpec& model, const Vec& w, const Dataset& data, const Batch& batch) {
  if (w.size() != model.param_count()) throw DimensionError("grad: parameter count mismatch");
  if (batch.empty()) throw ConfigError("grad: empty batch");
  Vec g(w.size(), 0.0);
  const double invn = 1.0 / static_cast<double>(batch.size());

  if (model.kind == ModelKind::quadratic) {
    for (std::size_t i : batch) {
      double r = dot(model.quadratic_x[i], w) - model.quadratic_y[i];
      axpy(r * invn, model.quadratic_x[i], g);
    }
    return g;
  }
  if (model.kind == ModelKind::linear_regression) {
    const std::size_t out = model.layer_sizes[1];
    const std::size_t in = model.layer_sizes[0];
    for (std::size_t i : batch) {
      for (std::size_t o = 0; o < out; ++o) {
        double h = 0.0;
        for (std::size_t k = 0; k < in; ++k) h += w[o * in + k] * data.inputs[i][k];
        double r = (h - data.targets[i][o]) * invn;
        for (std::size_t k = 0; k < in; ++k) g[o * in + k] += r * data.inputs[i][k];
      }
    }
    return g;
  }

  const ParamLayout pl = model.layout();
  for (std::size_t i : batch) {
    detail::ForwardTrace trace;
    Vec h = detail::mlp_forward(model, w, data.inputs[i], &trace);
    Vec delta;
    detail::output_loss(model, h, data, i, &delta);
    // backprop through layers, last to first
    for (std::size_t li = pl.layers.size(); li-- > 0;) {
      const LayerShape& ls = pl.layers[li];
      const std::size_t off = pl.layer_offset(li);
      const bool last = (li + 1 == pl.layers.size());
      const Vec& z = trace.preactivations[li];
      const Vec& a_in = trace.activations[li];
      Vec dz(ls.out);
      for (std::size_t o = 0; o < ls.out; ++o)
        dz[o] = last ? delta[o] : delta[o] * detail::activate_deriv(model.activation, z[o]);
      for (std::size_t o = 0; o < ls.out; ++o) {
        double d = dz[o] * invn;
        double* grow = g.data() + off + o * ls.in;
        for (std::size_t k = 0; k < ls.in; ++k) grow[k] += d * a_in[k];
        if (ls.has_bias) g[off + ls.out * ls.in + o] += d;
      }
      if (li > 0) {
        Vec next(ls.in, 0.0);
        for (std::size_t o = 0; o < ls.out; ++o) {
          const double* row = w.data() + off + o * ls.in;
          for (std::size_t k = 0; k < ls.in; ++k) next[k] += row[k] * dz[o];
        }
        delta = std::move(next);
      }
    }
  }
  if (!all_finite(g)) throw NumericError("grad: non-finite value");
  return g;
}

inline double full_loss(const ModelSpec& model, const Vec& w, const Dataset& data) {
  if (model.kind == ModelKind::quadratic) {
    Batch b(model.quadratic_x.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
    return loss(model, w, data, b);
  }
  return loss(model, w, data, full_batch(data));
}

inline Vec full_gradient(const ModelSpec& model, const Vec& w, const Dataset& data) {
  if (model.kind == ModelKind::quadratic) {
    Batch b(model.quadratic_x.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
    return grad(model, w, data, b);
  }
  return grad(model, w, data, full_batch(data));
}

/// Classification accuracy; regression models report negative MSE-free value 0.
inline double accuracy(const ModelSpec& model, const Vec& w, const Dataset& data) {
  if (!data.is_classification() || model.kind != ModelKind::mlp) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vec h = detail::mlp_forward(model, w, data.inputs[i], nullptr);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < h.size(); ++k)
      if (h[k] > h[arg]) arg = k;
    if (arg == data.class_labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

/// Central finite differences of full_gradient, symmetrized.
inline DenseMatrix hessian_fd(const ModelSpec& model, const Vec& w, const Dataset& data,
                              std::size_t dim_cap = 2000) {
  const std::size_t d = w.size();
  if (d > dim_cap)
    throw ConfigError("hessian_fd: dimension " + std::to_string(d) + " exceeds cap " +
                      std::to_string(dim_cap));
  DenseMatrix h(d, d);
  Vec wp = w;
  for (std::size_t j = 0; j < d; ++j) {
    double step = 1e-4 * (1.0 + std::abs(w[j]));
    wp[j] = w[j] + step;
    Vec gp = full_gradient(model, wp, data);
    wp[j] = w[j] - step;
    Vec gm = full_gradient(model, wp, data);
    wp[j] = w[j];
    for (std::size_t i = 0; i < d; ++i) h(i, j) = (gp[i] - gm[i]) / (2.0 * step);
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      double m = 0.5 * (h(i, j) + h(j, i));
      h(i, j) = h(j, i) = m;
    }
  return h;
}

/// RK4 integration of the full-batch gradient flow; returns w at every step
/// including w0.
inline std::vector<Vec> gradient_flow(const ModelSpec& model, const Vec& w0, const Dataset& data,
                                      double t_end, double dt) {
  if (dt <= 0.0) throw ConfigError("gradient_flow: dt must be > 0");
  if (t_end < 0.0) throw ConfigError("gradient_flow: t_end must be >= 0");
  auto rhs = [&](const Vec& w) { return scaled(full_gradient(model, w, data), -1.0); };
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<Vec> traj;
  traj.reserve(steps + 1);
  traj.push_back(w0);
  Vec w = w0;
  for (std::size_t s = 0; s < steps; ++s) {
    Vec k1 = rhs(w);
    Vec w2 = w; axpy(0.5 * dt, k1, w2);
    Vec k2 = rhs(w2);
    Vec w3 = w; axpy(0.5 * dt, k2, w3);
    Vec k3 = rhs(w3);
    Vec w4 = w; axpy(dt, k3, w4);
    Vec k4 = rhs(w4);
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(w))
      throw NumericError("gradient_flow: diverged at step " + std::to_string(s));
    traj.push_back(w);
  }
  return traj;
}

/// Draws a random teacher MLP, Gaussian inputs and noisy labels; the student
/// spec shares the architecture.
inline std::pair<Dataset, ModelSpec> make_teacher_student(std::uint64_t seed, std::size_t in_dim,
                                                          std::size_t hidden,
                                                          std::size_t n_samples,
                                                          double noise_std) {
  if (in_dim == 0 || hidden == 0 || n_samples == 0)
    throw ConfigError("make_teacher_student: dims must be >= 1");
  ModelSpec teacher;
  teacher.kind = ModelKind::mlp;
  teacher.layer_sizes = {in_dim, hidden, 1};
  teacher.activation = Activation::tanh;
  teacher.loss = LossKind::mse;

  Rng wrng(Rng::derive(seed, "teacher_weights"));
  Vec tw(teacher.param_count());
  for (double& v : tw) v = wrng.normal();

  Rng xrng(Rng::derive(seed, "teacher_inputs"));
  Rng nrng(Rng::derive(seed, "teacher_noise"));
  Dataset data;
  data.name = "teacher_student";
  for (std::size_t i = 0; i < n_samples; ++i) {
    Vec x(in_dim);
    for (double& v : x) v = xrng.normal();
    Vec h = detail::mlp_forward(teacher, tw, x, nullptr);
    data.inputs.push_back(std::move(x));
    data.targets.push_back({h[0] + noise_std * nrng.normal()});
  }
  return {std::move(data), teacher};
}

inline Vec random_init(const ModelSpec& model, std::uint64_t seed, double scale = 0.5) {
  Rng rng(Rng::derive(seed, "init"));
  Vec w(model.param_count());
  for (double& v : w) v = scale * rng.normal();
  return w;
}

}  // namespace sdprune
