#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprune/errors.hpp"
#include "sdprune/grouping.hpp"
#include "sdprune/linalg.hpp"
#include "sdprune/model.hpp"
#include "sdprune/prox.hpp"

namespace sdprune {

/// Near-zero eigenspace of a Hessian: the flat directions pruning may use.
struct FlatSubspace {
  DenseMatrix p0;        // d x k, orthonormal columns
  Vec eigenvalues;       // full spectrum, ascending
  double zero_tol_rel = 1e-3;
  std::size_t k = 0;
  bool degenerate = false;  // all eigenvalues near zero

  std::size_t dim() const { return p0.rows(); }
};

inline FlatSubspace flat_subspace(const DenseMatrix& h, double zero_tol_rel = 1e-3) {
  if (zero_tol_rel <= 0.0 || zero_tol_rel >= 1.0)
    throw ConfigError("flat_subspace: zero_tol_rel must be in (0,1)");
  EigenDecomposition ed = sym_eigen(h);
  const std::size_t d = h.rows();
  double max_abs = 0.0;
  for (double lam : ed.eigenvalues) max_abs = std::max(max_abs, std::abs(lam));
  const double cutoff = zero_tol_rel * std::max(max_abs, 1e-12);

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < d; ++j)
    if (std::abs(ed.eigenvalues[j]) <= cutoff) keep.push_back(j);

  FlatSubspace sub;
  sub.eigenvalues = ed.eigenvalues;
  sub.zero_tol_rel = zero_tol_rel;
  sub.k = keep.size();
  sub.degenerate = (keep.size() == d);
  sub.p0 = DenseMatrix(d, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c)
    for (std::size_t i = 0; i < d; ++i) sub.p0(i, c) = ed.eigenvectors(i, keep[c]);
  return sub;
}

/// Orthogonal projection onto the flat subspace: p0 * (p0^T x).
inline Vec project(const FlatSubspace& sub, const Vec& x) {
  if (x.size() != sub.dim()) throw DimensionError("project: length mismatch");
  if (sub.k == 0) return Vec(x.size(), 0.0);
  Vec coeff = sub.p0.apply_transpose(x);
  return sub.p0.apply(coeff);
}

/// s_i = <E(w_i*), Pi_i(E_G(w*))> per group.
inline Vec direction_factors(const Vec& w_star, const GroupPartition& g, const FlatSubspace& sub) {
  if (w_star.size() != g.d() || w_star.size() != sub.dim())
    throw DimensionError("direction_factors: length mismatch");
  Vec norms = group_norms(w_star, g);
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (norms[i] == 0.0)
      throw ConfigError("direction_factors: group " + std::to_string(i) +
                        " of w* is zero; the direction factor is undefined");
  Vec eg = normalize_groups(w_star, g);
  Vec projected = project(sub, eg);
  Vec s(g.group_count(), 0.0);
  for (std::size_t i = 0; i < g.group_count(); ++i) {
    double acc = 0.0;
    for (std::size_t idx : g.group(i)) acc += (w_star[idx] / norms[i]) * projected[idx];
    s[i] = acc;
  }
  return s;
}

struct PruneSolution {
  Vec w_pruned;
  Vec s;                        // per-group direction factors
  Vec shrink;                   // per-group (1 - lambda*s_i/||w_i*||)_+
  double lambda = 0.0;
  std::vector<std::size_t> pruned_groups;

  nlohmann::json to_json() const {
    return {{"w_pruned", w_pruned}, {"s", s},           {"shrink", shrink},
            {"lambda", lambda},     {"pruned_groups", pruned_groups}};
  }
};

/// Exact structured directional pruning: group_prox with each group's s_i.
inline PruneSolution exact_sdp_prune(const Vec& w_star, const GroupPartition& g,
                                     const FlatSubspace& sub, double lambda) {
  if (lambda < 0.0) throw ConfigError("exact_sdp_prune: lambda must be >= 0");
  PruneSolution sol;
  sol.lambda = lambda;
  sol.s = direction_factors(w_star, g, sub);
  sol.w_pruned.assign(w_star.size(), 0.0);
  sol.shrink.assign(g.group_count(), 0.0);
  Vec norms = group_norms(w_star, g);
  for (std::size_t i = 0; i < g.group_count(); ++i) {
    double factor = 1.0 - lambda * sol.s[i] / norms[i];
    if (factor <= 0.0) {
      sol.shrink[i] = 0.0;
      sol.pruned_groups.push_back(i);
      continue;
    }
    sol.shrink[i] = factor;
    for (std::size_t idx : g.group(i)) sol.w_pruned[idx] = factor * w_star[idx];
  }
  return sol;
}

/// Residuals of the perturbation identity s_i*E(w_i*) = Pi_i(E_G(w*)).
/// `parallel` is |s_i - <E(w_i*), Pi_i(E_G)>| (zero by construction);
/// `orthogonal` measures how far the colinearity reading holds.
struct PerturbationResiduals {
  double parallel = 0.0;
  double orthogonal = 0.0;
};

inline PerturbationResiduals perturbation_check(const PruneSolution& sol, const Vec& w_star,
                                                const GroupPartition& g, const FlatSubspace& sub) {
  for (std::size_t i : sol.pruned_groups)
    throw ConfigError("perturbation_check: group " + std::to_string(i) +
                      " is pruned to zero; the identity holds only off the clamp");
  Vec eg = normalize_groups(w_star, g);
  Vec projected = project(sub, eg);
  Vec norms = group_norms(w_star, g);
  PerturbationResiduals res;
  for (std::size_t i = 0; i < g.group_count(); ++i) {
    double inner = 0.0, ortho_sq = 0.0;
    for (std::size_t idx : g.group(i)) {
      double e = w_star[idx] / norms[i];
      inner += e * projected[idx];
      double diff = projected[idx] - sol.s[i] * e;
      ortho_sq += diff * diff;
    }
    res.parallel = std::max(res.parallel, std::abs(sol.s[i] - inner));
    res.orthogonal = std::max(res.orthogonal, std::sqrt(ortho_sq));
  }
  return res;
}

struct FlatnessRow {
  double lambda;
  double sdp_loss_delta;
  double naive_loss_delta;
  bool sdp_clamped;    // some group hit the clamp under SDP factors
  bool naive_clamped;  // some group hit the clamp under s_i = 1
};

struct FlatnessTable {
  std::vector<FlatnessRow> rows;
  double grad_norm_at_w_star = 0.0;
  bool at_minimum_warning = false;
};

/// Sweeps lambda, pruning exactly and evaluating full-batch loss deltas,
/// with a naive group-lasso comparison column (s_i forced to 1).
inline FlatnessTable loss_flatness_check(const ModelSpec& model, const Dataset& data,
                                         const Vec& w_star, const GroupPartition& g,
                                         const FlatSubspace& sub, const Vec& lambda_grid,
                                         double grad_tol = 1e-6) {
  FlatnessTable table;
  table.grad_norm_at_w_star = norm2(full_gradient(model, w_star, data));
  table.at_minimum_warning = table.grad_norm_at_w_star > grad_tol;
  const double base = full_loss(model, w_star, data);
  Vec norms = group_norms(w_star, g);
  Vec s = direction_factors(w_star, g, sub);
  for (double lambda : lambda_grid) {
    FlatnessRow row{};
    row.lambda = lambda;
    Vec sdp(w_star.size(), 0.0), naive(w_star.size(), 0.0);
    for (std::size_t i = 0; i < g.group_count(); ++i) {
      double fs = 1.0 - lambda * s[i] / norms[i];
      double fn = 1.0 - lambda / norms[i];
      if (fs <= 0.0) row.sdp_clamped = true;
      if (fn <= 0.0) row.naive_clamped = true;
      for (std::size_t idx : g.group(i)) {
        sdp[idx] = std::max(fs, 0.0) * w_star[idx];
        naive[idx] = std::max(fn, 0.0) * w_star[idx];
      }
    }
    row.sdp_loss_delta = full_loss(model, sdp, data) - base;
    row.naive_loss_delta = full_loss(model, naive, data) - base;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace sdprune
