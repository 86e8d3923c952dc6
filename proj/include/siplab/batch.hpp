#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "siplab/rng.hpp"

namespace siplab {

// R stationary paths of length n, row-major. For Markov families `states`
// additionally holds the underlying chain states at times 0..n (row length
// n+1); for the linear family `innovations` holds eps_{-J}..eps_n (row
// length J+n+1) so conditional expectations given time 0 are exactly
// computable from the retained past.
struct TrajectoryBatch {
  std::size_t replicas = 0;
  std::size_t length = 0;          // n
  std::vector<double> values;      // R x n, X_1..X_n
  std::vector<double> states;      // optional, R x (n+1)
  std::vector<double> innovations; // optional, R x (lag_trunc+n+1)
  long lag_trunc = 0;
  long burn_in = 0;
  std::vector<SeedStream> seeds;   // one per replica

  double value(std::size_t r, std::size_t k) const {  // k in 1..n
    return values[r * length + (k - 1)];
  }
  double state(std::size_t r, std::size_t k) const {  // k in 0..n
    return states[r * (length + 1) + k];
  }
  const double* value_row(std::size_t r) const { return values.data() + r * length; }
  const double* state_row(std::size_t r) const { return states.data() + r * (length + 1); }
  const double* innovation_row(std::size_t r) const {
    return innovations.data() + r * (static_cast<std::size_t>(lag_trunc) + length + 1);
  }

  void validate() const;  // finite entries, shape consistency

  // Long-format CSV (replica,step,value) plus a JSON metadata sidecar.
  void write_csv(const std::filesystem::path& csv_path,
                 const std::filesystem::path& sidecar_json,
                 const std::string& family_label,
                 const std::string& params_json) const;
};

}  // namespace siplab
