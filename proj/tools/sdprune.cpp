#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdprune/experiment.hpp"

namespace {

using sdprune::ConfigError;

// --set model.kind=mlp style overrides applied to the raw config JSON
void apply_override(nlohmann::json& j, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
  std::string path = kv.substr(0, eq);
  std::string value = kv.substr(eq + 1);
  nlohmann::json* node = &j;
  std::size_t pos = 0;
  while (true) {
    auto dotp = path.find('.', pos);
    std::string key = path.substr(pos, dotp == std::string::npos ? dotp : dotp - pos);
    if (key.empty()) throw ConfigError("--set: empty key segment in '" + path + "'");
    if (dotp == std::string::npos) {
      nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    pos = dotp + 1;
  }
}

sdprune::ExperimentConfig make_config(const std::string& config_path, const std::string& out_dir,
                                      const std::string& seed_str,
                                      const std::vector<std::string>& overrides) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("config: cannot open " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  for (const auto& kv : overrides) apply_override(j, kv);
  if (!seed_str.empty()) j["run"]["seed"] = std::stoull(seed_str);
  sdprune::ExperimentConfig cfg = sdprune::parse_config(j);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured directional pruning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_str;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub, bool need_config = true) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (JSON)");
    if (need_config) opt->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed_str, "seed override");
    sub->add_option("--set", overrides, "config override, key.path=value")->take_all();
  };

  auto* train = app.add_subcommand("train", "run an optimizer and log the trajectory");
  add_common(train);

  auto* prune = app.add_subcommand("prune-exact", "exact directional pruning at a checkpoint");
  add_common(prune);
  std::string ckpt;
  std::vector<double> lambdas{0.01, 0.1, 1.0};
  double zero_tol = 1e-3;
  prune->add_option("--checkpoint", ckpt, "checkpoint.json to prune")->required();
  prune->add_option("--lambdas", lambdas, "pruning strengths to sweep");
  prune->add_option("--zero-tol", zero_tol, "relative eigenvalue cutoff for the flat subspace");

  auto* prox = app.add_subcommand("prox-check", "randomized oracle check of the group prox");
  add_common(prox, false);
  std::size_t n_cases = 10000;
  double prox_tol = 1e-6;
  prox->add_option("--cases", n_cases, "number of random problems");
  prox->add_option("--tol", prox_tol, "relative residual tolerance");

  auto* connect = app.add_subcommand("connect", "train a Bezier path between two checkpoints");
  add_common(connect);
  std::string ckpt_a, ckpt_b;
  connect->add_option("--ckpt-a", ckpt_a, "first endpoint checkpoint")->required();
  connect->add_option("--ckpt-b", ckpt_b, "second endpoint checkpoint")->required();

  auto* contour = app.add_subcommand("contour", "loss grid on the plane through three solutions");
  add_common(contour);
  std::string ckpt1, ckpt2, ckpt3;
  std::size_t nu = 25, nv = 25;
  contour->add_option("--ckpt-1", ckpt1, "first anchor checkpoint")->required();
  contour->add_option("--ckpt-2", ckpt2, "second anchor checkpoint")->required();
  contour->add_option("--ckpt-3", ckpt3, "third anchor checkpoint")->required();
  contour->add_option("--nu", nu, "grid resolution, u axis");
  contour->add_option("--nv", nv, "grid resolution, v axis");

  auto* theory = app.add_subcommand("theory", "asymptotic residual checks on a fixture");
  add_common(theory);
  std::string which = "thm2";
  std::vector<double> gammas{1e-2, 1e-3, 1e-4};
  double t_end = 50.0, stride = 0.1;
  theory->add_option("--which", which, "thm2 or thm3");
  theory->add_option("--gammas", gammas, "learning rates, largest first");
  theory->add_option("--t-end", t_end, "time horizon");
  theory->add_option("--stride", stride, "integration stride (thm3)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      auto cfg = make_config(config_path, out_dir, seed_str, overrides);
      sdprune::RunReport rep = sdprune::cmd_train(cfg);
      std::printf("train: loss=%g sparsity=%g flops_reduction=%g (%.1fs)\n", rep.final_train_loss,
                  rep.sparsity, rep.flops_reduction, rep.wall_seconds);
    } else if (prune->parsed()) {
      auto cfg = make_config(config_path, out_dir, seed_str, overrides);
      auto res = sdprune::cmd_prune_exact(cfg, ckpt, lambdas, zero_tol);
      if (res.table.at_minimum_warning)
        std::printf("warning: gradient norm %g at checkpoint; not at a minimum\n",
                    res.table.grad_norm_at_w_star);
      for (const auto& row : res.table.rows)
        std::printf("lambda=%g sdp_delta=%g naive_delta=%g%s\n", row.lambda, row.sdp_loss_delta,
                    row.naive_loss_delta, row.sdp_clamped ? " (clamped)" : "");
    } else if (prox->parsed()) {
      std::uint64_t seed = seed_str.empty() ? 0 : std::stoull(seed_str);
      std::string dir = out_dir.empty() ? "." : out_dir;
      auto res = sdprune::cmd_prox_check(n_cases, seed, dir, prox_tol);
      std::printf("prox-check: %zu cases, %zu failures, max residual %g\n", res.n_cases,
                  res.failures, res.max_residual);
      if (res.failures > 0) return 1;
    } else if (connect->parsed()) {
      auto cfg = make_config(config_path, out_dir, seed_str, overrides);
      auto res = sdprune::cmd_connect(cfg, ckpt_a, ckpt_b);
      std::printf("connect: max curve loss %g (endpoints %g, %g)\n", res.max_curve_loss, res.loss_a,
                  res.loss_b);
    } else if (contour->parsed()) {
      auto cfg = make_config(config_path, out_dir, seed_str, overrides);
      std::string path = sdprune::cmd_contour(cfg, ckpt1, ckpt2, ckpt3, nu, nv);
      std::printf("contour: wrote %s\n", path.c_str());
    } else if (theory->parsed()) {
      auto cfg = make_config(config_path, out_dir, seed_str, overrides);
      auto res = sdprune::cmd_theory(cfg, which, gammas, t_end, stride);
      for (const auto& s : res.series)
        std::printf("gamma=%g final residual %g\n", s.gamma, s.residual.back());
      if (!res.mu_in_theorem_range)
        std::printf("warning: mu outside (0.5,1); the asymptotic guarantee does not apply\n");
      std::printf("monotone trend: %s\n", res.monotone_pass ? "pass" : "FAIL");
      if (!res.monotone_pass) return 1;
    }
  } catch (const sdprune::FixtureAbort& e) {
    std::fprintf(stderr, "fixture abort: %s\n", e.what());
    return 4;
  } catch (const sdprune::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const sdprune::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
