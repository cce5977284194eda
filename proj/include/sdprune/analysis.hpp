#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sdprune/errors.hpp"
#include "sdprune/grouping.hpp"
#include "sdprune/linalg.hpp"
#include "sdprune/model.hpp"
#include "sdprune/optim.hpp"
#include "sdprune/rng.hpp"
#include "sdprune/sdp_oracle.hpp"

namespace sdprune {

struct TrajectoryPoint {
  std::size_t n = 0;
  double t = 0.0;  // n * gamma
  double train_loss = 0.0;
  std::optional<double> test_accuracy;
  double sparsity = 0.0;
  std::optional<Vec> group_norms_snapshot;
  std::optional<Vec> w_snapshot;
};

struct TrajectoryLog {
  std::vector<TrajectoryPoint> steps;
};

struct ResidualSeries {
  Vec t;
  Vec residual;
  double gamma = 0.0;
};

namespace detail {

inline std::vector<std::size_t> log_points(std::size_t n_steps, std::size_t n_logs) {
  std::vector<std::size_t> pts;
  for (std::size_t k = 1; k <= n_logs; ++k)
    pts.push_back(std::max<std::size_t>(1, n_steps * k / n_logs));
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace detail

/// Full-batch AltSDP against the closed-form directional pruning of the
/// plain gradient-descent iterate, at matched times t = n*gamma. The flat
/// subspace and direction factors come from the GD endpoint's Hessian.
inline ResidualSeries theorem2_residual(const ModelSpec& model, const Dataset& data, const Vec& w0,
                                        const GroupPartition& g, double gamma, double c, double mu,
                                        double t_end, double zero_tol_rel = 1e-6,
                                        std::size_t n_logs = 10) {
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / gamma));
  AltSdpState sdp = AltSdpState::init(w0, g, gamma, c, mu);
  Vec w_gd = w0;

  auto logs = detail::log_points(n_steps, n_logs);
  std::vector<Vec> sdp_at, gd_at;
  std::size_t next = 0;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    altsdp_step(sdp, full_gradient(model, sdp.w, data));
    axpy(-gamma, full_gradient(model, w_gd, data), w_gd);
    if (next < logs.size() && step == logs[next]) {
      sdp_at.push_back(sdp.w);
      gd_at.push_back(w_gd);
      ++next;
    }
  }

  DenseMatrix h = hessian_fd(model, w_gd, data);
  FlatSubspace flat = flat_subspace(h, zero_tol_rel);

  ResidualSeries out;
  out.gamma = gamma;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    double t = static_cast<double>(logs[k]) * gamma;
    Vec s_hat = direction_factors(gd_at[k], g, flat);
    double lambda = c * std::sqrt(gamma) * std::pow(t, mu);
    Vec norms = group_norms(gd_at[k], g);
    Vec rhs(w0.size(), 0.0);
    for (std::size_t i = 0; i < g.group_count(); ++i) {
      double factor = std::max(1.0 - lambda * s_hat[i] / norms[i], 0.0);
      for (std::size_t idx : g.group(i)) rhs[idx] = factor * gd_at[k][idx];
    }
    out.t.push_back(t);
    out.residual.push_back(norm2(sub(sdp_at[k], rhs)) / (1.0 + norm2(gd_at[k])));
  }
  return out;
}

/// Deterministic (full-batch, Brownian term zero) check of the dual-iterate
/// expansion: v_gamma(t) against
///   w(t) + sqrt(g)*c*t^mu*E_G(w(t)) - sqrt(g)*c*Int_0^t Phi(t,s) d(E_G(w(s))s^mu)
/// with Phi(t,s) = exp(-H(t-s)) for the constant quadratic Hessian. Aborts
/// with FixtureAbort if a coordinate of the flow crosses zero (jump terms
/// are out of scope).
inline ResidualSeries theorem3_deterministic_check(const ModelSpec& model, const Dataset& data,
                                                   const Vec& w0, const GroupPartition& g,
                                                   double gamma, double c, double mu, double t_end,
                                                   double stride, std::size_t n_logs = 5) {
  if (stride <= 0.0) throw ConfigError("theorem3 check: stride must be > 0");
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / gamma));

  // dual averaging run, logging v at sampled times
  AltSdpState sdp = AltSdpState::init(w0, g, gamma, c, mu);
  auto logs = detail::log_points(n_steps, n_logs);
  std::vector<Vec> v_at;
  std::size_t next = 0;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    altsdp_step(sdp, full_gradient(model, sdp.w, data));
    if (next < logs.size() && step == logs[next]) {
      v_at.push_back(sdp.v);
      ++next;
    }
  }

  // gradient flow sampled on the stride grid (RK4 substeps for accuracy)
  const std::size_t substeps = 5;
  std::vector<Vec> flow = gradient_flow(model, w0, data, t_end, stride / substeps);
  std::vector<Vec> w_nodes;
  std::vector<double> s_nodes;
  for (std::size_t k = 0; k * substeps < flow.size(); ++k) {
    w_nodes.push_back(flow[k * substeps]);
    s_nodes.push_back(static_cast<double>(k) * stride);
  }
  for (std::size_t k = 1; k < w_nodes.size(); ++k)
    for (std::size_t j = 0; j < w0.size(); ++j)
      if (w_nodes[k - 1][j] * w_nodes[k][j] < 0.0)
        throw FixtureAbort("theorem3 check: coordinate " + std::to_string(j) +
                               " crossed zero near t=" + std::to_string(s_nodes[k]),
                           s_nodes[k]);

  DenseMatrix h = hessian_fd(model, w0, data);
  EigenDecomposition ed = sym_eigen(h);
  const std::size_t d = w0.size();
  auto phi_apply = [&](double dt_span, const Vec& x) {
    // exp(-H*dt) * x through the eigenbasis
    Vec coeff = ed.eigenvectors.apply_transpose(x);
    for (std::size_t k = 0; k < d; ++k) coeff[k] *= std::exp(-ed.eigenvalues[k] * dt_span);
    return ed.eigenvectors.apply(coeff);
  };

  // q(s) = E_G(w(s)) * s^mu at every node
  std::vector<Vec> q(w_nodes.size());
  for (std::size_t k = 0; k < w_nodes.size(); ++k)
    q[k] = scaled(normalize_groups(w_nodes[k], g), std::pow(s_nodes[k], mu));

  ResidualSeries out;
  out.gamma = gamma;
  for (std::size_t li = 0; li < logs.size(); ++li) {
    double t = static_cast<double>(logs[li]) * gamma;
    // nearest stride node at or below t
    std::size_t kt = std::min<std::size_t>(static_cast<std::size_t>(std::llround(t / stride)),
                                           w_nodes.size() - 1);
    const Vec& wt = w_nodes[kt];
    // Riemann-Stieltjes sum with midpoint propagator: Phi(t, mid) * dq
    Vec integral(d, 0.0);
    for (std::size_t k = 0; k + 1 <= kt; ++k) {
      Vec dq = sub(q[k + 1], q[k]);
      double mid = 0.5 * (s_nodes[k] + s_nodes[k + 1]);
      axpy(1.0, phi_apply(t - mid, dq), integral);
    }
    Vec rhs = wt;
    axpy(std::sqrt(gamma) * c * std::pow(t, mu), normalize_groups(wt, g), rhs);
    axpy(-std::sqrt(gamma) * c, integral, rhs);
    out.t.push_back(t);
    out.residual.push_back(norm2(sub(v_at[li], rhs)) / (1.0 + norm2(wt)));
  }
  return out;
}

/// Angle in degrees between each snapshot w and E_G(w). NaN marks an
/// undefined angle (zero snapshot).
inline Vec angle_series(const std::vector<Vec>& snapshots, const GroupPartition& g) {
  Vec out;
  for (const Vec& w : snapshots) {
    Vec eg = normalize_groups(w, g);
    double nw = norm2(w), ne = norm2(eg);
    if (nw == 0.0 || ne == 0.0) {
      out.push_back(std::nan(""));
      continue;
    }
    double cosv = std::clamp(dot(w, eg) / (nw * ne), -1.0, 1.0);
    out.push_back(std::acos(cosv) * 180.0 / 3.14159265358979323846);
  }
  return out;
}

struct BezierCurve {
  Vec a;        // endpoint, fixed
  Vec b;        // endpoint, fixed
  Vec control;  // trainable

  Vec at(double tau) const {
    Vec p(a.size());
    double ca = (1.0 - tau) * (1.0 - tau);
    double cc = 2.0 * tau * (1.0 - tau);
    double cb = tau * tau;
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = ca * a[i] + cc * control[i] + cb * b[i];
    return p;
  }
};

struct BezierResult {
  BezierCurve curve;
  double max_loss = 0.0;             // over the tau profile grid
  Vec profile_tau;
  Vec profile_loss;                  // full-batch loss along the curve
};

/// Trains the quadratic Bezier control point with one uniformly sampled tau
/// per SGD step; the loss profile is reported on a fixed 101-point grid.
inline BezierResult bezier_connect(const ModelSpec& model, const Dataset& data, const Vec& wa,
                                   const Vec& wb, std::size_t epochs, double lr,
                                   std::size_t batch_size, std::uint64_t seed) {
  if (wa.size() != wb.size()) throw DimensionError("bezier_connect: endpoint dims differ");
  BezierCurve curve{wa, wb, scaled(add(wa, wb), 0.5)};
  Rng rng(Rng::derive(seed, "bezier"));
  const std::size_t n = data.size();
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, n / std::max<std::size_t>(1, batch_size));
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      double tau = rng.uniform();
      Batch batch(std::min(batch_size, n));
      for (auto& idx : batch) idx = rng.below(n);
      Vec point = curve.at(tau);
      Vec gw = grad(model, point, data, batch);
      // d(point)/d(control) = 2*tau*(1-tau), shared across coordinates
      axpy(-lr * 2.0 * tau * (1.0 - tau), gw, curve.control);
      if (!all_finite(curve.control)) throw NumericError("bezier_connect: diverged");
    }
  }
  BezierResult res;
  res.curve = curve;
  for (int k = 0; k <= 100; ++k) {
    double tau = k / 100.0;
    double l = full_loss(model, curve.at(tau), data);
    res.profile_tau.push_back(tau);
    res.profile_loss.push_back(l);
    res.max_loss = std::max(res.max_loss, l);
  }
  return res;
}

struct PlaneGrid {
  Vec origin;
  Vec axis_u, axis_v;                 // orthonormal
  Vec u_coords, v_coords;             // grid lines
  DenseMatrix losses;                 // nu x nv
  std::optional<DenseMatrix> test_errors;
  // plane coordinates of the three anchor points
  double u1 = 0, v1 = 0, u2 = 0, v2 = 0, u3 = 0, v3 = 0;
};

/// Loss contour on the plane through w1, w2, w3, covering their triangle
/// plus a relative margin.
inline PlaneGrid plane_contour(const ModelSpec& model, const Dataset& data, const Vec& w1,
                               const Vec& w2, const Vec& w3, std::size_t nu, std::size_t nv,
                               double margin = 0.2, const Dataset* test_data = nullptr) {
  if (nu < 2 || nv < 2) throw ConfigError("plane_contour: resolution must be >= 2");
  Vec d2 = sub(w2, w1), d3 = sub(w3, w1);
  std::pair<Vec, Vec> axes;
  try {
    axes = orthonormalize_pair(d2, d3);
  } catch (const NumericError&) {
    throw ConfigError("plane_contour: anchors are affinely degenerate");
  }
  PlaneGrid grid;
  grid.origin = w1;
  grid.axis_u = axes.first;
  grid.axis_v = axes.second;
  grid.u2 = dot(d2, grid.axis_u);
  grid.v2 = dot(d2, grid.axis_v);
  grid.u3 = dot(d3, grid.axis_u);
  grid.v3 = dot(d3, grid.axis_v);
  double ulo = std::min({0.0, grid.u2, grid.u3}), uhi = std::max({0.0, grid.u2, grid.u3});
  double vlo = std::min({0.0, grid.v2, grid.v3}), vhi = std::max({0.0, grid.v2, grid.v3});
  double uspan = std::max(uhi - ulo, 1e-12), vspan = std::max(vhi - vlo, 1e-12);
  ulo -= margin * uspan; uhi += margin * uspan;
  vlo -= margin * vspan; vhi += margin * vspan;

  grid.losses = DenseMatrix(nu, nv);
  if (test_data) grid.test_errors = DenseMatrix(nu, nv);
  for (std::size_t i = 0; i < nu; ++i)
    grid.u_coords.push_back(ulo + (uhi - ulo) * static_cast<double>(i) / static_cast<double>(nu - 1));
  for (std::size_t j = 0; j < nv; ++j)
    grid.v_coords.push_back(vlo + (vhi - vlo) * static_cast<double>(j) / static_cast<double>(nv - 1));
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      Vec p = grid.origin;
      axpy(grid.u_coords[i], grid.axis_u, p);
      axpy(grid.v_coords[j], grid.axis_v, p);
      grid.losses(i, j) = full_loss(model, p, data);
      if (test_data) (*grid.test_errors)(i, j) = 1.0 - accuracy(model, p, *test_data);
    }
  return grid;
}

/// FLOPs saved by removing pruned output units from their layer and from
/// the next layer's inputs. Dense FLOPs per layer = 2 * n_in * n_out.
inline double flops_reduction(const std::vector<std::size_t>& layer_sizes,
                              const std::vector<std::vector<std::size_t>>& pruned_per_layer) {
  if (layer_sizes.size() < 2) throw ConfigError("flops_reduction: need at least one layer");
  const std::size_t n_layers = layer_sizes.size() - 1;
  if (pruned_per_layer.size() != n_layers)
    throw DimensionError("flops_reduction: pruned list count != layer count");
  if (!pruned_per_layer.back().empty())
    throw ConfigError("flops_reduction: pruning output-layer units is not allowed");
  double dense = 0.0, pruned = 0.0;
  std::size_t in_kept = layer_sizes[0];
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::size_t out = layer_sizes[l + 1];
    std::size_t n_pruned = pruned_per_layer[l].size();
    for (std::size_t u : pruned_per_layer[l])
      if (u >= out) throw ConfigError("flops_reduction: pruned unit index out of range");
    if (n_pruned >= out)
      throw ConfigError("flops_reduction: layer " + std::to_string(l) + " fully pruned");
    std::size_t out_kept = out - n_pruned;
    dense += 2.0 * static_cast<double>(layer_sizes[l]) * static_cast<double>(out);
    pruned += 2.0 * static_cast<double>(in_kept) * static_cast<double>(out_kept);
    in_kept = out_kept;
  }
  return 1.0 - pruned / dense;
}

}  // namespace sdprune
