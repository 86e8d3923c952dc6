#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "siplab/stats.hpp"

namespace siplab {

// All Diophantine quantities are computed in 50-digit arithmetic; doubles
// corrupt d(ka,Z) long before k reaches the ranges probed here.

// Catalog of built-in rotation numbers. "golden" = (sqrt5-1)/2,
// "sqrt2" = sqrt2-1, "cbrt2" = 2^(1/3)-1 (badly approximable in the weak
// sense only), plus rational test values "half", "third".
double irrational_value(const std::string& id);          // reduced mod 1, as double
bool is_known_irrational(const std::string& id);

struct ContinuedFraction {
  std::vector<std::int64_t> quotients;       // a_0, a_1, ...
  std::vector<std::int64_t> p;               // convergent numerators
  std::vector<std::int64_t> q;               // convergent denominators
  bool terminated = false;                   // input was rational at this depth
};

// CF expansion of a in (0,1) with exact integer convergents. Throws if the
// working precision cannot certify `depth` quotients (message names the
// safe depth).
ContinuedFraction continued_fraction(const std::string& a_id, int depth);
ContinuedFraction continued_fraction_of(double a, int depth);  // for rational-ish test inputs

// d(k a, Z) = min_{i} |k a - i|, k reduced mod 1 in extended precision.
double dist_to_lattice(std::int64_t k, const std::string& a_id);

// frac(k a) in extended precision, returned as double (for cos(2 pi k a)).
double frac_k_times_a(std::int64_t k, const std::string& a_id);

struct ParouxSeries {
  std::vector<long> block_ends;          // dyadic block upper edges
  std::vector<double> partial_sums;      // running sum of |fhat|^2 / d^2
  std::vector<double> block_max_term;    // per-block max term (near-resonance probe)
  double total = 0.0;
  std::string verdict;                   // converges | diverges | inconclusive
};

// Partial sums of sum_k |fhat(k)|^2 / d(ka,Z)^2 over 1 <= k <= k_max
// (doubled for the conjugate modes). fhat_abs(k) indexed from k=1.
ParouxSeries paroux_series(const std::vector<double>& fhat_abs,
                           const std::string& a_id, long k_max);

struct BadlyApproxReport {
  double c_hat = 0.0;          // min over k <= k_max of k * d(ka,Z)
  std::int64_t argmin_k = 0;
  RateFit trend;               // log(k d) vs log k
};

BadlyApproxReport badly_approximable_report(const std::string& a_id, std::int64_t k_max);

}  // namespace siplab
