#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprune/errors.hpp"
#include "sdprune/linalg.hpp"

namespace sdprune {

/// Disjoint cover of parameter indices 0..d-1; each cell is pruned or kept
/// as a unit.
class GroupPartition {
 public:
  GroupPartition() : d_(0) {}

  GroupPartition(std::size_t d, std::vector<std::vector<std::size_t>> groups)
      : d_(d), groups_(std::move(groups)) {
    validate();
  }

  std::size_t d() const { return d_; }
  std::size_t group_count() const { return groups_.size(); }
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }
  const std::vector<std::size_t>& group(std::size_t i) const { return groups_[i]; }

  static GroupPartition singletons(std::size_t d) {
    std::vector<std::vector<std::size_t>> g(d);
    for (std::size_t i = 0; i < d; ++i) g[i] = {i};
    return GroupPartition(d, std::move(g));
  }

  static GroupPartition whole(std::size_t d) {
    std::vector<std::size_t> all(d);
    for (std::size_t i = 0; i < d; ++i) all[i] = i;
    return GroupPartition(d, {all});
  }

  nlohmann::json to_json() const {
    return {{"d", d_}, {"groups", groups_}};
  }

  static GroupPartition from_json(const nlohmann::json& j) {
    return GroupPartition(j.at("d").get<std::size_t>(),
                          j.at("groups").get<std::vector<std::vector<std::size_t>>>());
  }

 private:
  void validate() const {
    if (d_ == 0) throw ConfigError("partition: d must be >= 1");
    std::vector<char> seen(d_, 0);
    std::size_t covered = 0;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      if (groups_[gi].empty())
        throw ConfigError("partition: group " + std::to_string(gi) + " is empty");
      for (std::size_t idx : groups_[gi]) {
        if (idx >= d_)
          throw ConfigError("partition: index " + std::to_string(idx) + " out of range");
        if (seen[idx])
          throw ConfigError("partition: index " + std::to_string(idx) +
                            " appears in more than one group");
        seen[idx] = 1;
        ++covered;
      }
    }
    if (covered != d_) throw ConfigError("partition: groups do not cover 0..d-1");
  }

  std::size_t d_;
  std::vector<std::vector<std::size_t>> groups_;
};

enum class GroupingKind { per_parameter, per_output_unit, per_layer, explicit_groups };

struct GroupingStrategy {
  GroupingKind kind = GroupingKind::per_parameter;
  std::vector<std::vector<std::size_t>> explicit_groups;  // used when kind == explicit_groups
};

/// Layer layout of a dense network: per layer, its weight-matrix shape.
/// Flattening order is layer by layer, weights row-major then bias.
struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  bool has_bias = true;
  std::size_t size() const { return in * out + (has_bias ? out : 0); }
};

struct ParamLayout {
  std::vector<LayerShape> layers;

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& l : layers) s += l.size();
    return s;
  }

  std::size_t layer_offset(std::size_t li) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < li; ++i) off += layers[i].size();
    return off;
  }
};

inline GroupPartition make_partition(const ParamLayout& layout, const GroupingStrategy& strategy) {
  const std::size_t d = layout.total();
  switch (strategy.kind) {
    case GroupingKind::explicit_groups:
      return GroupPartition(d, strategy.explicit_groups);
    case GroupingKind::per_parameter:
      return GroupPartition::singletons(d);
    case GroupingKind::per_layer: {
      std::vector<std::vector<std::size_t>> gs;
      std::size_t off = 0;
      for (const auto& l : layout.layers) {
        std::vector<std::size_t> g(l.size());
        for (std::size_t i = 0; i < l.size(); ++i) g[i] = off + i;
        gs.push_back(std::move(g));
        off += l.size();
      }
      return GroupPartition(d, std::move(gs));
    }
    case GroupingKind::per_output_unit: {
      // Each output neuron's incoming weight row plus its bias forms a group,
      // so a pruned group removes the whole unit.
      std::vector<std::vector<std::size_t>> gs;
      std::size_t off = 0;
      for (const auto& l : layout.layers) {
        for (std::size_t o = 0; o < l.out; ++o) {
          std::vector<std::size_t> g;
          g.reserve(l.in + 1);
          for (std::size_t i = 0; i < l.in; ++i) g.push_back(off + o * l.in + i);
          if (l.has_bias) g.push_back(off + l.out * l.in + o);
          gs.push_back(std::move(g));
        }
        off += l.size();
      }
      return GroupPartition(d, std::move(gs));
    }
  }
  throw ConfigError("make_partition: unknown grouping kind");
}

inline std::vector<Vec> group_slices(const Vec& w, const GroupPartition& g) {
  if (w.size() != g.d()) throw DimensionError("group_slices: length mismatch");
  std::vector<Vec> out;
  out.reserve(g.group_count());
  for (const auto& idx : g.groups()) {
    Vec slice(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) slice[k] = w[idx[k]];
    out.push_back(std::move(slice));
  }
  return out;
}

inline Vec group_norms(const Vec& w, const GroupPartition& g) {
  if (w.size() != g.d()) throw DimensionError("group_norms: length mismatch");
  Vec norms(g.group_count());
  for (std::size_t gi = 0; gi < g.group_count(); ++gi) {
    double s = 0.0;
    for (std::size_t idx : g.group(gi)) s += w[idx] * w[idx];
    norms[gi] = std::sqrt(s);
  }
  return norms;
}

/// E_G: each group scaled to unit norm; a zero group stays zero.
inline Vec normalize_groups(const Vec& w, const GroupPartition& g) {
  if (w.size() != g.d()) throw DimensionError("normalize_groups: length mismatch");
  Vec out(w.size(), 0.0);
  for (const auto& idx : g.groups()) {
    double s = 0.0;
    for (std::size_t i : idx) s += w[i] * w[i];
    double n = std::sqrt(s);
    if (n == 0.0) continue;
    for (std::size_t i : idx) out[i] = w[i] / n;
  }
  return out;
}

/// Fraction of parameters in groups whose entries are all exactly zero.
inline double sparsity(const Vec& w, const GroupPartition& g) {
  if (w.size() != g.d()) throw DimensionError("sparsity: length mismatch");
  std::size_t zeroed = 0;
  for (const auto& idx : g.groups()) {
    bool all_zero = true;
    for (std::size_t i : idx)
      if (w[i] != 0.0) { all_zero = false; break; }
    if (all_zero) zeroed += idx.size();
  }
  return static_cast<double>(zeroed) / static_cast<double>(g.d());
}

}  // namespace sdprune
