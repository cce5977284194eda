#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "sdprune/errors.hpp"
#include "sdprune/linalg.hpp"
#include "sdprune/rng.hpp"

namespace sdprune {

/// min_w (1/2)||w* - w||^2 + lambda*s*||w||_2 over one group. lambda and s
/// only enter through their product; the pair is kept so callers can pass
/// the weight factor and the direction factor separately.
struct ProxProblem {
  Vec w_star;
  double lambda = 1.0;
  double s = 0.0;
};

inline double prox_objective(const ProxProblem& p, const Vec& w) {
  Vec r = sub(p.w_star, w);
  return 0.5 * dot(r, r) + p.lambda * p.s * norm2(w);
}

/// Closed-form solution: (1 - lambda*s/||w*||)_+ * w*. Total: w* = 0 maps to 0.
/// For s < 0 the factor exceeds 1 and the group grows.
inline Vec group_prox(const ProxProblem& p) {
  double n = norm2(p.w_star);
  if (n == 0.0) return Vec(p.w_star.size(), 0.0);
  double factor = 1.0 - p.lambda * p.s / n;
  if (factor <= 0.0) return Vec(p.w_star.size(), 0.0);
  return scaled(p.w_star, factor);
}

/// Independent oracle: dense grid plus golden-section refinement on the
/// scalar problem along E(w*). Restricted to w* != 0, where colinearity of
/// the minimizer with w* is established.
inline Vec brute_force_prox(const ProxProblem& p, std::size_t grid = 1000000) {
  double n = norm2(p.w_star);
  if (n == 0.0) throw ConfigError("brute_force_prox: w* must be nonzero");
  Vec e = scaled(p.w_star, 1.0 / n);
  // f(alpha*e) = 0.5*(alpha - n)^2 + lambda*s*|alpha| + const terms cancel
  auto f = [&](double alpha) {
    return 0.5 * (alpha - n) * (alpha - n) + p.lambda * p.s * std::abs(alpha);
  };
  // the minimizer is at most n + |lambda*s| from the origin; pad with n
  const double hi = 2.0 * n + std::abs(p.lambda * p.s);
  const double lo = -hi;
  double best_alpha = lo, best_f = f(lo);
  for (std::size_t k = 1; k <= grid; ++k) {
    double alpha = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid);
    double fa = f(alpha);
    if (fa < best_f) {  // ties keep the lowest alpha
      best_f = fa;
      best_alpha = alpha;
    }
  }
  // golden-section refinement on the bracketing interval
  const double step = (hi - lo) / static_cast<double>(grid);
  double a = best_alpha - step, b = best_alpha + step;
  const double gr = 0.6180339887498949;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + n); ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = f(x2);
    }
  }
  double alpha = 0.5 * (a + b);
  // the clamp region has an exact-zero minimizer; snap when the refined
  // point is within grid noise of it and not better
  if (std::abs(alpha) < 2.0 * step && f(0.0) <= f(alpha)) alpha = 0.0;
  return scaled(e, alpha);
}

/// Objective values at the two stationary points of the nonconvex s<0 case;
/// the first (larger-norm) one is the global minimizer.
inline std::pair<double, double> stationary_values(const ProxProblem& p) {
  if (p.s >= 0.0) throw ConfigError("stationary_values: requires s < 0");
  double n = norm2(p.w_star);
  if (n == 0.0) throw ConfigError("stationary_values: w* must be nonzero");
  double ls = p.lambda * p.s;
  Vec sp1 = scaled(p.w_star, 1.0 - ls / n);
  Vec sp2 = scaled(p.w_star, 1.0 + ls / n);
  return {prox_objective(p, sp1), prox_objective(p, sp2)};
}

/// Full-dimensional multi-start projected-gradient oracle for tiny dims;
/// validates the colinearity reduction itself.
inline Vec multistart_prox(const ProxProblem& p, Rng& rng, int restarts = 20) {
  const std::size_t d = p.w_star.size();
  double n = norm2(p.w_star);
  Vec best = group_prox(p);
  double best_f = prox_objective(p, best);
  for (int r = 0; r < restarts; ++r) {
    Vec w(d);
    for (double& v : w) v = rng.normal(0.0, 1.0 + n);
    double step = 0.1;
    double fw = prox_objective(p, w);
    for (int it = 0; it < 5000; ++it) {
      // subgradient of the objective; at w=0 use the smooth part only
      double wn = norm2(w);
      Vec g = sub(w, p.w_star);
      if (wn > 0.0) axpy(p.lambda * p.s / wn, w, g);
      Vec cand = w;
      axpy(-step, g, cand);
      double fc = prox_objective(p, cand);
      if (fc < fw) {
        w = std::move(cand);
        fw = fc;
      } else {
        step *= 0.5;
        if (step < 1e-12) break;
      }
    }
    // also test the exact-zero candidate reachable by the clamp
    double f0 = prox_objective(p, Vec(d, 0.0));
    if (f0 < fw) {
      w.assign(d, 0.0);
      fw = f0;
    }
    if (fw < best_f) {
      best_f = fw;
      best = w;
    }
  }
  return best;
}

}  // namespace sdprune
