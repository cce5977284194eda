#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdprune/analysis.hpp"
#include "sdprune/config.hpp"
#include "sdprune/csv.hpp"
#include "sdprune/prox.hpp"

namespace sdprune {

struct RunReport {
  double final_train_loss = 0.0;
  std::optional<double> final_test_accuracy;
  double sparsity = 0.0;
  double flops_reduction = 0.0;
  double wall_seconds = 0.0;
  std::string config_hash;
  std::vector<std::string> artifacts;
  TrajectoryLog log;
  Vec final_w;
};

namespace detail {

inline std::string provenance(const ExperimentConfig& cfg) {
  return "config=" + cfg.config_hash() + " seed=" + std::to_string(cfg.seed);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return j;
}

inline Vec read_checkpoint_w(const std::string& path) {
  return read_json(path).at("w").get<Vec>();
}

inline std::size_t data_size(const ExperimentSetup& s) {
  return s.model.kind == ModelKind::quadratic ? s.model.quadratic_x.size() : s.data.size();
}

/// Pruned hidden units per layer from the zero groups of a per-output-unit
/// partition; returns empty if the partition is not unit-structured.
inline std::vector<std::vector<std::size_t>> pruned_units(const ExperimentConfig& cfg,
                                                          const ExperimentSetup& s, const Vec& w) {
  if (cfg.partition_strategy.kind != GroupingKind::per_output_unit ||
      s.model.kind != ModelKind::mlp)
    return {};
  const std::size_t n_layers = s.model.layer_sizes.size() - 1;
  std::vector<std::vector<std::size_t>> per_layer(n_layers);
  std::size_t gi = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    for (std::size_t u = 0; u < s.model.layer_sizes[l + 1]; ++u, ++gi) {
      bool zero = true;
      for (std::size_t idx : s.partition.group(gi))
        if (w[idx] != 0.0) { zero = false; break; }
      if (zero && l + 1 < n_layers) per_layer[l].push_back(u);  // output layer is never removable
    }
  }
  return per_layer;
}

}  // namespace detail

inline RunReport cmd_train(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentSetup setup = build_setup(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  const std::size_t n = detail::data_size(setup);
  const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size > n) ? n : cfg.batch_size;
  const std::size_t steps_per_epoch = n / batch;

  Vec w0 = random_init(setup.model, cfg.seed);
  AltSdpState dual;
  SgdState sgd;
  const bool is_dual = cfg.optimizer != OptimizerKind::sgd;
  if (cfg.optimizer == OptimizerKind::altsdp) {
    dual = AltSdpState::init(w0, setup.partition, cfg.schedule.base, cfg.c, cfg.mu, cfg.momentum);
    dual.nonzero_floor = cfg.sparsity_floor;
  } else if (cfg.optimizer == OptimizerKind::l1dp) {
    dual = AltSdpState::init(w0, GroupPartition::singletons(w0.size()), cfg.schedule.base, cfg.c,
                             cfg.mu, cfg.momentum);
  } else if (cfg.optimizer == OptimizerKind::rda) {
    dual = AltSdpState::init_rda(setup.partition, cfg.schedule.base, cfg.lambda_rda);
  } else {
    sgd.w = w0;
    sgd.gamma = cfg.schedule.base;
    sgd.momentum = cfg.momentum;
  }

  RunReport report;
  report.config_hash = cfg.config_hash();
  const Vec* w_cur = is_dual ? &dual.w : &sgd.w;

  auto log_point = [&](std::size_t step, double t) {
    TrajectoryPoint pt;
    pt.n = step;
    pt.t = t;
    pt.train_loss = full_loss(setup.model, *w_cur, setup.data);
    if (setup.test_data) pt.test_accuracy = accuracy(setup.model, *w_cur, *setup.test_data);
    pt.sparsity = sparsity(*w_cur, setup.partition);
    if (cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0) pt.w_snapshot = *w_cur;
    report.log.steps.push_back(std::move(pt));
  };

  std::size_t step = 0;
  double t = 0.0;
  log_point(0, 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double gamma = schedule_gamma(cfg.schedule, epoch);
    if (is_dual) dual.gamma = gamma; else sgd.gamma = gamma;
    // deterministic per-epoch shuffle
    Rng shuffle(Rng::derive(cfg.seed, "shuffle:" + std::to_string(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      Batch b(order.begin() + static_cast<std::ptrdiff_t>(s * batch),
              order.begin() + static_cast<std::ptrdiff_t>((s + 1) * batch));
      Vec g = grad(setup.model, *w_cur, setup.data, b);
      if (is_dual) {
        if (cfg.optimizer == OptimizerKind::rda) rda_step(dual, g);
        else altsdp_step(dual, g);
      } else {
        sgd_step(sgd, g);
      }
      ++step;
      t += gamma;
      if (step % cfg.log_stride == 0) log_point(step, t);
    }
  }
  if (report.log.steps.back().n != step) log_point(step, t);

  report.final_w = *w_cur;
  report.final_train_loss = report.log.steps.back().train_loss;
  report.final_test_accuracy = report.log.steps.back().test_accuracy;
  report.sparsity = report.log.steps.back().sparsity;
  auto per_layer = detail::pruned_units(cfg, setup, *w_cur);
  if (!per_layer.empty()) {
    try {
      report.flops_reduction = flops_reduction(setup.model.layer_sizes, per_layer);
    } catch (const ConfigError&) {
      report.flops_reduction = 0.0;  // a fully pruned layer has no dense-flops reading
    }
  }

  // artifacts
  std::string traj_path = cfg.out_dir + "/trajectory.csv";
  {
    CsvWriter csv(traj_path, "n,t,train_loss,test_acc,sparsity", detail::provenance(cfg));
    for (const auto& pt : report.log.steps) {
      csv.field(pt.n).field(pt.t).field(pt.train_loss);
      csv.field(pt.test_accuracy ? fmt_double(*pt.test_accuracy) : std::string(""));
      csv.field(pt.sparsity);
      csv.end_row();
    }
  }
  std::string ckpt_path = cfg.out_dir + "/checkpoint.json";
  if (is_dual) {
    detail::write_json(ckpt_path, altsdp_to_json(dual));
  } else {
    nlohmann::json j{{"n", sgd.n}, {"gamma", sgd.gamma}, {"w", sgd.w},
                     {"momentum", sgd.momentum}, {"buffer", nullptr}};
    if (sgd.momentum_buffer) j["buffer"] = *sgd.momentum_buffer;
    detail::write_json(ckpt_path, j);
  }
  report.artifacts = {traj_path, ckpt_path};

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string report_path = cfg.out_dir + "/report.json";
  nlohmann::json jr{{"final_train_loss", report.final_train_loss},
                    {"final_test_accuracy", nullptr},
                    {"sparsity", report.sparsity},
                    {"flops_reduction", report.flops_reduction},
                    {"wall_seconds", report.wall_seconds},
                    {"config_hash", report.config_hash},
                    {"artifacts", report.artifacts}};
  if (report.final_test_accuracy) jr["final_test_accuracy"] = *report.final_test_accuracy;
  detail::write_json(report_path, jr);
  report.artifacts.push_back(report_path);
  return report;
}

struct PruneExactResult {
  FlatnessTable table;
  std::vector<std::string> artifacts;
};

inline PruneExactResult cmd_prune_exact(const ExperimentConfig& cfg,
                                        const std::string& checkpoint_path, const Vec& lambda_grid,
                                        double zero_tol_rel = 1e-3, std::size_t hessian_cap = 2000) {
  ExperimentSetup setup = build_setup(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  Vec w = detail::read_checkpoint_w(checkpoint_path);
  if (w.size() != setup.model.param_count())
    throw DimensionError("prune-exact: checkpoint has " + std::to_string(w.size()) +
                         " parameters, model expects " +
                         std::to_string(setup.model.param_count()));
  DenseMatrix h = hessian_fd(setup.model, w, setup.data, hessian_cap);
  FlatSubspace sub = flat_subspace(h, zero_tol_rel);

  PruneExactResult res;
  res.table = loss_flatness_check(setup.model, setup.data, w, setup.partition, sub, lambda_grid);

  std::string flat_path = cfg.out_dir + "/flatness.csv";
  {
    CsvWriter csv(flat_path, "lambda,sdp_loss_delta,naive_loss_delta,sdp_clamped,naive_clamped",
                  detail::provenance(cfg));
    for (const auto& row : res.table.rows) {
      csv.field(row.lambda).field(row.sdp_loss_delta).field(row.naive_loss_delta);
      csv.field(static_cast<std::size_t>(row.sdp_clamped));
      csv.field(static_cast<std::size_t>(row.naive_clamped));
      csv.end_row();
    }
  }
  res.artifacts.push_back(flat_path);
  for (double lambda : lambda_grid) {
    PruneSolution sol = exact_sdp_prune(w, setup.partition, sub, lambda);
    nlohmann::json j = sol.to_json();
    j["config_hash"] = cfg.config_hash();
    j["grad_norm_at_checkpoint"] = res.table.grad_norm_at_w_star;
    j["not_at_minimum_warning"] = res.table.at_minimum_warning;
    std::string p = cfg.out_dir + "/prune_" + fmt_double(lambda) + ".json";
    detail::write_json(p, j);
    res.artifacts.push_back(p);
  }
  return res;
}

struct ProxCheckResult {
  std::size_t n_cases = 0;
  std::size_t failures = 0;
  double max_residual = 0.0;
  std::string cases_path;
};

inline ProxCheckResult cmd_prox_check(std::size_t n_cases, std::uint64_t seed,
                                      const std::string& out_dir, double tolerance_scale = 1e-6,
                                      std::size_t oracle_grid = 20000) {
  std::filesystem::create_directories(out_dir);
  Rng rng(Rng::derive(seed, "prox_check"));
  ProxCheckResult res;
  res.n_cases = n_cases;
  res.cases_path = out_dir + "/prox_cases.csv";
  CsvWriter csv(res.cases_path, "case,dim,lambda_s,residual,pass",
                "seed=" + std::to_string(seed));
  for (std::size_t k = 0; k < n_cases; ++k) {
    std::size_t dim = 1 + rng.below(20);
    ProxProblem p;
    p.w_star.resize(dim);
    for (double& v : p.w_star) v = rng.normal();
    if (norm2(p.w_star) == 0.0) p.w_star[0] = 1.0;
    double n = norm2(p.w_star);
    p.lambda = 1.0;
    // lambda*s spans [-3||w*||, 3||w*||], with exact s=0 sprinkled in
    p.s = (k % 50 == 0) ? 0.0 : rng.uniform(-3.0 * n, 3.0 * n);
    Vec closed = group_prox(p);
    Vec brute = brute_force_prox(p, oracle_grid);
    double residual = norm2(sub(closed, brute));
    double tol = tolerance_scale * (1.0 + n);
    bool pass = residual <= tol;
    if (p.s < 0.0) {
      auto [f1, f2] = stationary_values(p);
      if (!(f1 < f2)) pass = false;
    }
    if (!pass) ++res.failures;
    res.max_residual = std::max(res.max_residual, residual);
    csv.field(k).field(dim).field(p.lambda * p.s).field(residual)
        .field(static_cast<std::size_t>(pass));
    csv.end_row();
  }
  nlohmann::json j{{"n_cases", res.n_cases},
                   {"failures", res.failures},
                   {"max_residual", res.max_residual},
                   {"tolerance_scale", tolerance_scale}};
  detail::write_json(out_dir + "/prox_summary.json", j);
  return res;
}

struct ConnectResult {
  double max_curve_loss = 0.0;
  double loss_a = 0.0;
  double loss_b = 0.0;
  std::string curve_path;
};

inline ConnectResult cmd_connect(const ExperimentConfig& cfg, const std::string& ckpt_a,
                                 const std::string& ckpt_b) {
  ExperimentSetup setup = build_setup(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  Vec wa = detail::read_checkpoint_w(ckpt_a);
  Vec wb = detail::read_checkpoint_w(ckpt_b);
  if (wa.size() != setup.model.param_count() || wb.size() != setup.model.param_count())
    throw DimensionError("connect: checkpoint dims do not match the model");
  std::size_t batch = cfg.batch_size == 0 ? detail::data_size(setup) : cfg.batch_size;
  BezierResult bez = bezier_connect(setup.model, setup.data, wa, wb, cfg.epochs,
                                    cfg.schedule.base, batch, cfg.seed);
  ConnectResult res;
  res.max_curve_loss = bez.max_loss;
  res.loss_a = full_loss(setup.model, wa, setup.data);
  res.loss_b = full_loss(setup.model, wb, setup.data);
  res.curve_path = cfg.out_dir + "/curve.csv";
  CsvWriter csv(res.curve_path, "tau,loss", detail::provenance(cfg));
  for (std::size_t i = 0; i < bez.profile_tau.size(); ++i) {
    csv.field(bez.profile_tau[i]).field(bez.profile_loss[i]);
    csv.end_row();
  }
  nlohmann::json j{{"max_curve_loss", res.max_curve_loss},
                   {"endpoint_loss_a", res.loss_a},
                   {"endpoint_loss_b", res.loss_b},
                   {"config_hash", cfg.config_hash()}};
  detail::write_json(cfg.out_dir + "/connect_report.json", j);
  return res;
}

inline std::string cmd_contour(const ExperimentConfig& cfg, const std::string& ckpt1,
                               const std::string& ckpt2, const std::string& ckpt3, std::size_t nu,
                               std::size_t nv) {
  ExperimentSetup setup = build_setup(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  Vec w1 = detail::read_checkpoint_w(ckpt1);
  Vec w2 = detail::read_checkpoint_w(ckpt2);
  Vec w3 = detail::read_checkpoint_w(ckpt3);
  const Dataset* test = setup.test_data ? &*setup.test_data : nullptr;
  PlaneGrid grid = plane_contour(setup.model, setup.data, w1, w2, w3, nu, nv, 0.2, test);
  std::string path = cfg.out_dir + "/grid.csv";
  std::string prov = detail::provenance(cfg) + " anchors=(0,0),(" + fmt_double(grid.u2) + "," +
                     fmt_double(grid.v2) + "),(" + fmt_double(grid.u3) + "," +
                     fmt_double(grid.v3) + ")";
  CsvWriter csv(path, "u,v,loss,test_err", prov);
  for (std::size_t i = 0; i < grid.u_coords.size(); ++i)
    for (std::size_t j = 0; j < grid.v_coords.size(); ++j) {
      csv.field(grid.u_coords[i]).field(grid.v_coords[j]).field(grid.losses(i, j));
      csv.field(grid.test_errors ? fmt_double((*grid.test_errors)(i, j)) : std::string(""));
      csv.end_row();
    }
  return path;
}

struct TheoryResult {
  std::vector<ResidualSeries> series;  // one per gamma, in input order
  bool monotone_pass = false;
  bool mu_in_theorem_range = true;
  std::vector<std::string> artifacts;
};

inline TheoryResult cmd_theory(const ExperimentConfig& cfg, const std::string& which,
                               const Vec& gamma_list, double t_end, double stride = 0.1) {
  if (which != "thm2" && which != "thm3")
    throw ConfigError("theory: 'which' must be thm2 or thm3");
  ExperimentSetup setup = build_setup(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  Vec w0 = random_init(setup.model, cfg.seed);

  TheoryResult res;
  res.mu_in_theorem_range = cfg.mu > 0.5 && cfg.mu < 1.0;
  for (double gamma : gamma_list) {
    ResidualSeries s;
    if (which == "thm2")
      s = theorem2_residual(setup.model, setup.data, w0, setup.partition, gamma, cfg.c, cfg.mu,
                            t_end);
    else
      s = theorem3_deterministic_check(setup.model, setup.data, w0, setup.partition, gamma, cfg.c,
                                       cfg.mu, t_end, stride);
    std::string p = cfg.out_dir + "/residuals_" + fmt_double(gamma) + ".csv";
    CsvWriter csv(p, "t,residual,gamma", detail::provenance(cfg));
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      csv.field(s.t[i]).field(s.residual[i]).field(gamma);
      csv.end_row();
    }
    res.artifacts.push_back(p);
    res.series.push_back(std::move(s));
  }
  res.monotone_pass = true;
  for (std::size_t i = 1; i < res.series.size(); ++i)
    if (res.series[i].residual.back() > res.series[i - 1].residual.back())
      res.monotone_pass = false;
  nlohmann::json j{{"which", which},
                   {"monotone_pass", res.monotone_pass},
                   {"mu_in_theorem_range", res.mu_in_theorem_range},
                   {"config_hash", cfg.config_hash()}};
  if (!res.mu_in_theorem_range)
    j["warning"] = "mu outside (0.5,1): the asymptotic guarantee does not apply";
  Vec finals;
  for (const auto& s : res.series) finals.push_back(s.residual.back());
  j["final_residuals"] = finals;
  detail::write_json(cfg.out_dir + "/theory_report.json", j);
  return res;
}

}  // namespace sdprune
