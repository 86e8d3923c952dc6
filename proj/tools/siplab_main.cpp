#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "siplab/experiment.hpp"

using siplab::ExperimentConfig;

namespace {

void add_process_flags(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--family", cfg.family, "dmr|circle|arl|pm|linear");
  cmd->add_option("--a", cfg.a, "dmr tail exponent a > 0");
  cmd->add_option("--circle-a", cfg.circle_a, "rotation id: golden|sqrt2|cbrt2");
  cmd->add_option("--s-exponent", cfg.s_exponent, "Fourier decay exponent");
  cmd->add_option("--log-eps", cfg.log_eps, "Fourier log-weight epsilon");
  cmd->add_option("--k-trunc", cfg.k_trunc, "Fourier truncation");
  cmd->add_option("--C", cfg.C, "arl contraction constant in (0,1]");
  cmd->add_option("--delta", cfg.delta, "arl drift exponent in [0,1)");
  cmd->add_option("--S", cfg.S, "arl innovation moment exponent");
  cmd->add_option("--innovation", cfg.innovation, "gaussian|student_t|sym_pareto");
  cmd->add_option("--t-dof", cfg.t_dof, "student t degrees of freedom");
  cmd->add_option("--gamma", cfg.gamma, "pm map parameter in (0,1)");
  cmd->add_option("--ulam-cells", cfg.ulam_cells, "transfer matrix cells");
  cmd->add_option("--burn-in", cfg.burn_in, "burn-in override");
  cmd->add_option("--alpha", cfg.alpha, "linear filter decay");
  cmd->add_option("--u-seq", cfg.u_seq, "zero|alt06|iid");
  cmd->add_option("--seed", cfg.root_seed, "root seed");
  cmd->add_option("--out", cfg.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("SIPLAB_THREADS")) {
    int t = std::atoi(threads);
    if (t > 0) omp_set_num_threads(t);
  }

  CLI::App app{"sip-lab: simulation and verification toolkit for strong "
               "invariance principles under projective criteria"};
  app.set_config("--config", "", "read options from an ini/toml file");
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string horizons_text;

  auto* sim = app.add_subcommand("simulate", "generate a stationary batch");
  add_process_flags(sim, cfg);
  sim->add_option("--n", cfg.n, "path length");
  sim->add_option("--reps", cfg.replicas, "replicas");

  auto* coeffs = app.add_subcommand("coeffs", "dependence coefficient curves");
  add_process_flags(coeffs, cfg);
  coeffs->add_option("--id", cfg.coefficient, "gamma|alpha1|alpha2|tau|theta");
  coeffs->add_option("--n", cfg.n, "max lag (dyadic grid)");
  coeffs->add_option("--reps", cfg.replicas, "replicas for MC estimators");

  auto* cond = app.add_subcommand("conditions", "evaluate a condition series");
  add_process_flags(cond, cfg);
  cond->add_option("--id", cfg.condition_id, "condition id")->required();
  cond->add_option("--p", cfg.p, "moment exponent p in (2,4]");
  cond->add_option("--t", cfg.t, "log exponent t > 2/p");
  cond->add_option("--n-max", cfg.n_max, "series horizon");
  cond->add_option("--gamma-exponent", cfg.gamma_exponent,
                   "free exponent (or synthetic power)");
  cond->add_option("--r", cfg.mixing_r, "tail exponent r");

  auto* dec = app.add_subcommand("decompose", "martingale decomposition of a path");
  add_process_flags(dec, cfg);
  dec->add_option("--n", cfg.n, "path length");
  dec->add_option("--trunc-N", cfg.trunc_N, "projection truncation");

  auto* cpl = app.add_subcommand("couple", "gaussian coupling experiments");
  add_process_flags(cpl, cfg);
  cpl->add_option("--method", cfg.method, "quantile|skorokhod");
  cpl->add_option("--horizons", horizons_text, "e.g. 2^10..2^17 or comma list");
  cpl->add_option("--reps", cfg.replicas, "replicas");

  auto* rep = app.add_subcommand("report", "merge reports under --out");
  rep->add_option("--out", cfg.out_dir, "directory holding earlier runs");

  CLI11_PARSE(app, argc, argv);

  cfg.command = app.get_subcommands().front()->get_name();
  if (!horizons_text.empty()) cfg.horizons = siplab::parse_horizons(horizons_text);
  if (cfg.command == "couple" && cfg.family == "dmr" && cfg.method.empty())
    cfg.method = "skorokhod";

  try {
    return siplab::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
