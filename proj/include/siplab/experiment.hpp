#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "siplab/process.hpp"

namespace siplab {

// One batch-experiment invocation. Fully serializable: a persisted config
// re-runs to byte-identical outputs.
struct ExperimentConfig {
  std::string command = "simulate";  // simulate|coeffs|conditions|decompose|couple|report
  std::string family = "dmr";       // process family (or coupling input family)

  // process parameters (a superset; families read what they need)
  double a = 1.0;
  std::string circle_a = "golden";
  double s_exponent = 2.2018504251546631;
  double log_eps = 0.5;
  int k_trunc = 64;
  double C = 0.5;
  double delta = 0.0;
  double S = 4.0;
  std::string innovation = "gaussian";
  int t_dof = 5;
  double gamma = 0.25;
  int ulam_cells = 2048;
  long burn_in = -1;  // -1 = family default
  double alpha = 1.0;
  std::string u_seq = "zero";

  long n = 4096;
  std::size_t replicas = 64;
  std::uint64_t root_seed = 1;

  // coeffs
  std::string coefficient = "gamma";   // gamma|alpha1|alpha2|tau|theta
  std::vector<long> lags;

  // conditions
  std::string condition_id;
  double p = 3.0;
  double t = 1.0;
  long n_max = 1024;
  double gamma_exponent = 0.5;
  double mixing_r = 5.0;

  // decompose
  long trunc_N = 1000;

  // couple
  std::string method = "skorokhod";
  std::vector<long> horizons;

  std::string out_dir = "out";

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  ProcessSpec process_spec() const;
};

// Runs the experiment, writes CSV artifacts plus report.json into out_dir.
// Exit code 0 iff every check in the run passed; 2 on partial failure.
int run_experiment(const ExperimentConfig& cfg);

// "horizons" syntax: "2^10..2^17" (dyadic range) or comma list
std::vector<long> parse_horizons(const std::string& text);

}  // namespace siplab
