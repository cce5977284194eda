#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprune/errors.hpp"
#include "sdprune/grouping.hpp"
#include "sdprune/linalg.hpp"

namespace sdprune {

/// Tuning function g(n, gamma) = c*sqrt(gamma)*(n*gamma)^mu.
inline double tuning(std::size_t n, double gamma, double c, double mu) {
  if (gamma <= 0.0 || c <= 0.0 || mu <= 0.0)
    throw ConfigError("tuning: gamma, c and mu must be > 0");
  if (n == 0) return 0.0;
  return c * std::sqrt(gamma) * std::pow(static_cast<double>(n) * gamma, mu);
}

/// Group soft-threshold: per group, (1 - g/||v_i||)_+ * v_i with 0/0 -> 0.
inline Vec group_soft_threshold(const Vec& v, const GroupPartition& partition, double threshold) {
  Vec w(v.size(), 0.0);
  for (const auto& idx : partition.groups()) {
    double s = 0.0;
    for (std::size_t i : idx) s += v[i] * v[i];
    double n = std::sqrt(s);
    if (n <= threshold) continue;  // exact zero group
    double factor = 1.0 - threshold / n;
    for (std::size_t i : idx) w[i] = factor * v[i];
  }
  return w;
}

enum class ThresholdMode { altsdp, rda };

struct AltSdpState {
  Vec v;                 // dual accumulator
  Vec w;                 // primal iterate
  std::size_t n = 0;     // completed steps
  double gamma = 0.1;    // current learning rate (callers apply schedules)
  double c = 1e-6;
  double mu = 0.51;
  GroupPartition partition;
  double momentum = 0.0;
  std::optional<Vec> momentum_buffer;
  ThresholdMode mode = ThresholdMode::altsdp;
  double lambda_rda = 0.0;                 // threshold slope for rda mode
  std::optional<double> nonzero_floor;     // freeze thresholding below this nonzero ratio
  bool threshold_frozen = false;
  double frozen_threshold = 0.0;

  static AltSdpState init(const Vec& w0, GroupPartition partition, double gamma, double c,
                          double mu, double momentum = 0.0) {
    if (w0.size() != partition.d()) throw DimensionError("altsdp init: w0/partition size mismatch");
    AltSdpState st;
    st.v = w0;  // v0 = w0 so the first (threshold-free) step matches SGD
    st.w = w0;
    st.gamma = gamma;
    st.c = c;
    st.mu = mu;
    st.partition = std::move(partition);
    st.momentum = momentum;
    return st;
  }

  static AltSdpState init_rda(GroupPartition partition, double gamma, double lambda_rda) {
    AltSdpState st;
    st.v.assign(partition.d(), 0.0);  // RDA starts from w0 = 0
    st.w.assign(partition.d(), 0.0);
    st.gamma = gamma;
    st.partition = std::move(partition);
    st.mode = ThresholdMode::rda;
    st.lambda_rda = lambda_rda;
    return st;
  }
};

namespace detail {

inline double threshold_at(const AltSdpState& st, std::size_t n) {
  if (st.mode == ThresholdMode::rda)
    return static_cast<double>(n) * st.gamma * st.lambda_rda;
  if (st.c == 0.0) return 0.0;  // plain dual averaging
  return tuning(n, st.gamma, st.c, st.mu);
}

inline double nonzero_ratio(const Vec& w, const GroupPartition& g) {
  std::size_t nz = 0;
  for (const auto& idx : g.groups()) {
    bool all_zero = true;
    for (std::size_t i : idx)
      if (w[i] != 0.0) { all_zero = false; break; }
    if (!all_zero) nz += idx.size();
  }
  return static_cast<double>(nz) / static_cast<double>(g.d());
}

inline void dual_averaging_step(AltSdpState& st, const Vec& gradient) {
  if (gradient.size() != st.v.size()) throw DimensionError("step: gradient size mismatch");
  if (!all_finite(gradient)) throw NumericError("step: non-finite gradient");
  const Vec* effective = &gradient;
  if (st.momentum > 0.0) {
    if (!st.momentum_buffer) st.momentum_buffer = Vec(st.v.size(), 0.0);
    Vec& buf = *st.momentum_buffer;
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = st.momentum * buf[i] + gradient[i];
    effective = &buf;
  }
  axpy(-st.gamma, *effective, st.v);

  double g = st.threshold_frozen ? st.frozen_threshold : threshold_at(st, st.n);
  Vec w_next = group_soft_threshold(st.v, st.partition, g);
  if (st.nonzero_floor && !st.threshold_frozen &&
      nonzero_ratio(w_next, st.partition) < *st.nonzero_floor) {
    // freeze at the last acceptable threshold to avoid excessive pruning
    st.threshold_frozen = true;
    st.frozen_threshold = st.n == 0 ? 0.0 : threshold_at(st, st.n - 1);
    w_next = group_soft_threshold(st.v, st.partition, st.frozen_threshold);
  }
  st.w = std::move(w_next);
  ++st.n;
}

}  // namespace detail

inline void altsdp_step(AltSdpState& state, const Vec& gradient) {
  detail::dual_averaging_step(state, gradient);
}

/// Group-lasso RDA: threshold n*gamma*lambda instead of the tuning function.
inline void rda_step(AltSdpState& state, const Vec& gradient) {
  if (state.mode != ThresholdMode::rda)
    throw ConfigError("rda_step: state was not constructed with init_rda");
  detail::dual_averaging_step(state, gradient);
}

/// l1 directional pruning is the per-parameter special case.
inline void l1_dp_step(AltSdpState& state, const Vec& gradient) {
  for (const auto& g : state.partition.groups())
    if (g.size() != 1)
      throw ConfigError("l1_dp_step: requires the per-parameter partition");
  detail::dual_averaging_step(state, gradient);
}

struct SgdState {
  Vec w;
  std::size_t n = 0;
  double gamma = 0.1;
  double momentum = 0.0;
  std::optional<Vec> momentum_buffer;
};

inline void sgd_step(SgdState& state, const Vec& gradient) {
  if (gradient.size() != state.w.size()) throw DimensionError("sgd_step: gradient size mismatch");
  if (!all_finite(gradient)) throw NumericError("sgd_step: non-finite gradient");
  if (state.momentum > 0.0) {
    if (!state.momentum_buffer) state.momentum_buffer = Vec(state.w.size(), 0.0);
    Vec& buf = *state.momentum_buffer;
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = state.momentum * buf[i] + gradient[i];
    axpy(-state.gamma, buf, state.w);
  } else {
    axpy(-state.gamma, gradient, state.w);
  }
  ++state.n;
}

struct LrSchedule {
  double base = 0.1;
  std::vector<std::pair<std::size_t, double>> milestones;  // (epoch, multiplier)

  void validate() const {
    std::size_t prev = 0;
    bool first = true;
    for (const auto& [epoch, mult] : milestones) {
      if (!first && epoch <= prev) throw ConfigError("schedule: milestones must increase");
      if (mult <= 0.0) throw ConfigError("schedule: multipliers must be > 0");
      prev = epoch;
      first = false;
    }
  }
};

inline double schedule_gamma(const LrSchedule& sched, std::size_t epoch) {
  double g = sched.base;
  for (const auto& [milestone, mult] : sched.milestones)
    if (epoch >= milestone) g *= mult;
  return g;
}

// --- checkpoint serialization ---

inline nlohmann::json altsdp_to_json(const AltSdpState& st) {
  nlohmann::json j{
      {"n", st.n},
      {"gamma", st.gamma},
      {"c", st.c},
      {"mu", st.mu},
      {"v", st.v},
      {"w", st.w},
      {"partition", st.partition.to_json()},
      {"momentum", st.momentum},
      {"buffer", nullptr},
  };
  if (st.momentum_buffer) j["buffer"] = *st.momentum_buffer;
  return j;
}

inline AltSdpState altsdp_from_json(const nlohmann::json& j) {
  AltSdpState st;
  st.n = j.at("n").get<std::size_t>();
  st.gamma = j.at("gamma").get<double>();
  st.c = j.at("c").get<double>();
  st.mu = j.at("mu").get<double>();
  st.v = j.at("v").get<Vec>();
  st.w = j.at("w").get<Vec>();
  st.partition = GroupPartition::from_json(j.at("partition"));
  st.momentum = j.at("momentum").get<double>();
  if (!j.at("buffer").is_null()) st.momentum_buffer = j.at("buffer").get<Vec>();
  if (st.v.size() != st.partition.d() || st.w.size() != st.partition.d())
    throw DimensionError("checkpoint: vector/partition size mismatch");
  return st;
}

}  // namespace sdprune
