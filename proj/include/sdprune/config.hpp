#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprune/data_io.hpp"
#include "sdprune/errors.hpp"
#include "sdprune/grouping.hpp"
#include "sdprune/model.hpp"
#include "sdprune/optim.hpp"

namespace sdprune {

using nlohmann::json;

enum class OptimizerKind { sgd, altsdp, rda, l1dp };

/// Declarative run description. Unknown keys anywhere are hard errors so a
/// typo in a hyperparameter name cannot silently change an experiment.
struct ExperimentConfig {
  json raw;

  // model
  ModelKind model_kind = ModelKind::mlp;
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::tanh;
  LossKind loss_kind = LossKind::mse;

  // data
  std::string data_kind;  // two_moons | teacher_student | overparam_regression | idx | csv
  json data_params;

  // partition
  GroupingStrategy partition_strategy;

  // optimizer
  OptimizerKind optimizer = OptimizerKind::sgd;
  LrSchedule schedule;
  double c = 0.0;
  double mu = 0.0;
  double momentum = 0.0;
  double lambda_rda = 0.0;
  std::optional<double> sparsity_floor;

  // run
  std::size_t epochs = 1;
  std::size_t batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;
  std::size_t log_stride = 1;
  std::size_t snapshot_stride = 0;  // 0 means no snapshots

  std::string out_dir = ".";

  std::string config_hash() const {
    std::string dump = raw.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : dump) {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ConfigError("config: unknown activation '" + s + "'");
}

inline LossKind parse_loss(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "softmax_cross_entropy") return LossKind::softmax_cross_entropy;
  throw ConfigError("config: unknown loss '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  detail::check_keys(j, {"model", "data", "partition", "optimizer", "run", "outputs"}, "config");

  const json& m = j.at("model");
  detail::check_keys(m, {"kind", "layer_sizes", "activation", "loss"}, "model");
  std::string mk = m.at("kind").get<std::string>();
  if (mk == "quadratic") cfg.model_kind = ModelKind::quadratic;
  else if (mk == "linear_regression") cfg.model_kind = ModelKind::linear_regression;
  else if (mk == "mlp") cfg.model_kind = ModelKind::mlp;
  else throw ConfigError("config: unknown model kind '" + mk + "'");
  if (m.contains("layer_sizes")) cfg.layer_sizes = m["layer_sizes"].get<std::vector<std::size_t>>();
  if (m.contains("activation")) cfg.activation = detail::parse_activation(m["activation"]);
  if (m.contains("loss")) cfg.loss_kind = detail::parse_loss(m["loss"]);

  const json& d = j.at("data");
  detail::check_keys(d,
                     {"kind", "n", "noise", "in_dim", "hidden", "dim", "flat_cols", "images",
                      "labels", "test_images", "test_labels", "path", "classification", "test_n"},
                     "data");
  cfg.data_kind = d.at("kind").get<std::string>();
  cfg.data_params = d;

  const json& p = j.at("partition");
  detail::check_keys(p, {"kind", "groups"}, "partition");
  std::string pk = p.at("kind").get<std::string>();
  if (pk == "per_parameter") cfg.partition_strategy.kind = GroupingKind::per_parameter;
  else if (pk == "per_output_unit") cfg.partition_strategy.kind = GroupingKind::per_output_unit;
  else if (pk == "per_layer") cfg.partition_strategy.kind = GroupingKind::per_layer;
  else if (pk == "explicit") {
    cfg.partition_strategy.kind = GroupingKind::explicit_groups;
    cfg.partition_strategy.explicit_groups =
        p.at("groups").get<std::vector<std::vector<std::size_t>>>();
  } else throw ConfigError("config: unknown partition kind '" + pk + "'");

  const json& o = j.at("optimizer");
  detail::check_keys(
      o, {"kind", "gamma", "milestones", "c", "mu", "momentum", "lambda_rda", "sparsity_floor"},
      "optimizer");
  std::string ok = o.at("kind").get<std::string>();
  if (ok == "sgd") cfg.optimizer = OptimizerKind::sgd;
  else if (ok == "altsdp") cfg.optimizer = OptimizerKind::altsdp;
  else if (ok == "rda") cfg.optimizer = OptimizerKind::rda;
  else if (ok == "l1dp") cfg.optimizer = OptimizerKind::l1dp;
  else throw ConfigError("config: unknown optimizer kind '" + ok + "'");
  cfg.schedule.base = o.at("gamma").get<double>();
  if (cfg.schedule.base <= 0.0) throw ConfigError("config: gamma must be > 0");
  if (o.contains("milestones"))
    for (const auto& ms : o["milestones"])
      cfg.schedule.milestones.emplace_back(ms.at(0).get<std::size_t>(), ms.at(1).get<double>());
  cfg.schedule.validate();
  if (o.contains("c")) cfg.c = o["c"].get<double>();
  if (o.contains("mu")) cfg.mu = o["mu"].get<double>();
  if (o.contains("momentum")) cfg.momentum = o["momentum"].get<double>();
  if (o.contains("lambda_rda")) cfg.lambda_rda = o["lambda_rda"].get<double>();
  if (o.contains("sparsity_floor")) cfg.sparsity_floor = o["sparsity_floor"].get<double>();
  if ((cfg.optimizer == OptimizerKind::altsdp || cfg.optimizer == OptimizerKind::l1dp) &&
      (cfg.c <= 0.0 || cfg.mu <= 0.0))
    throw ConfigError("config: altsdp/l1dp require c > 0 and mu > 0");

  const json& r = j.at("run");
  detail::check_keys(r, {"epochs", "batch_size", "seed", "log_stride", "snapshot_stride"}, "run");
  cfg.epochs = r.at("epochs").get<std::size_t>();
  if (r.contains("batch_size")) cfg.batch_size = r["batch_size"].get<std::size_t>();
  cfg.seed = r.at("seed").get<std::uint64_t>();
  if (r.contains("log_stride")) cfg.log_stride = std::max<std::size_t>(1, r["log_stride"].get<std::size_t>());
  if (r.contains("snapshot_stride")) cfg.snapshot_stride = r["snapshot_stride"].get<std::size_t>();

  if (j.contains("outputs")) {
    const json& out = j.at("outputs");
    detail::check_keys(out, {"dir", "emit"}, "outputs");
    if (out.contains("dir")) cfg.out_dir = out["dir"].get<std::string>();
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Materialized model + data from a config.
struct ExperimentSetup {
  ModelSpec model;
  Dataset data;
  std::optional<Dataset> test_data;
  GroupPartition partition;
};

inline ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  ExperimentSetup s;
  const json& d = cfg.data_params;
  if (cfg.data_kind == "two_moons") {
    s.data = make_two_moons(Rng::derive(cfg.seed, "data"), d.at("n").get<std::size_t>(),
                            d.value("noise", 0.1));
    if (d.contains("test_n"))
      s.test_data = make_two_moons(Rng::derive(cfg.seed, "test_data"),
                                   d["test_n"].get<std::size_t>(), d.value("noise", 0.1));
  } else if (cfg.data_kind == "teacher_student") {
    auto [data, spec] = make_teacher_student(Rng::derive(cfg.seed, "data"),
                                             d.at("in_dim").get<std::size_t>(),
                                             d.at("hidden").get<std::size_t>(),
                                             d.at("n").get<std::size_t>(), d.value("noise", 0.0));
    s.data = std::move(data);
  } else if (cfg.data_kind == "overparam_regression") {
    auto [x, y] = make_overparam_regression(Rng::derive(cfg.seed, "data"),
                                            d.at("n").get<std::size_t>(),
                                            d.at("dim").get<std::size_t>(),
                                            d.at("flat_cols").get<std::size_t>());
    s.model.quadratic_x = std::move(x);
    s.model.quadratic_y = std::move(y);
  } else if (cfg.data_kind == "idx") {
    s.data = load_idx(d.at("images").get<std::string>(), d.at("labels").get<std::string>());
    if (d.contains("test_images"))
      s.test_data = load_idx(d["test_images"].get<std::string>(),
                             d.at("test_labels").get<std::string>());
  } else if (cfg.data_kind == "csv") {
    s.data = load_csv(d.at("path").get<std::string>(), d.value("classification", false));
  } else {
    throw ConfigError("config: unknown data kind '" + cfg.data_kind + "'");
  }

  s.model.kind = cfg.model_kind;
  s.model.layer_sizes = cfg.layer_sizes;
  s.model.activation = cfg.activation;
  s.model.loss = cfg.loss_kind;
  if (cfg.model_kind == ModelKind::quadratic && s.model.quadratic_x.empty())
    throw ConfigError("config: quadratic model requires overparam_regression data");
  s.model.validate();
  if (cfg.model_kind != ModelKind::quadratic) {
    s.data.validate(s.model.out_dim());
    if (cfg.batch_size > s.data.size())
      throw ConfigError("config: batch_size exceeds dataset size");
  }

  s.partition = make_partition(s.model.layout(), cfg.partition_strategy);
  return s;
}

}  // namespace sdprune
