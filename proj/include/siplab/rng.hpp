#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>

namespace siplab {

// Identifies one reproducible random stream. The pair (root_seed, stream_index)
// fully determines the generated sequence, independently of how many worker
// threads consume other streams. Replica r of a batch uses stream_index = r
// (plus a fixed domain offset so different subsystems never share a stream).
struct SeedStream {
  std::uint64_t root_seed = 0;
  std::uint64_t stream_index = 0;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna). State seeded with SplitMix64 per the
// authors' recommendation; per-stream states are derived from the hashed
// (root_seed, stream_index) pair, the usual stream-splitting scheme for
// counter-keyed reproducible parallel simulation.
class Rng {
 public:
  Rng() : Rng(SeedStream{}) {}
  explicit Rng(SeedStream s) : stream_(s) {
    std::uint64_t mix = s.root_seed;
    std::uint64_t key = splitmix64(mix) ^ (0x6a09e667f3bcc909ULL + s.stream_index);
    key ^= key >> 33;
    std::uint64_t sm = key * 0xff51afd7ed558ccdULL;
    for (auto& w : state_) w = splitmix64(sm);
  }

  const SeedStream& stream() const { return stream_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on (0,1): 53-bit mantissa, never returns 0 or 1.
  double uniform() {
    std::uint64_t u = next_u64() >> 11;           // 53 bits
    double x = (static_cast<double>(u) + 0.5) * 0x1.0p-53;
    return x;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool coin() { return (next_u64() >> 63) != 0; }

  int rademacher() { return coin() ? 1 : -1; }

  double normal() { return normal_quantile(uniform()); }

  // Student t with integer dof, built from dof+1 normals (deterministic
  // draw count keeps streams aligned across implementations).
  double student_t(int dof) {
    double z = normal();
    double s = 0.0;
    for (int i = 0; i < dof; ++i) {
      double g = normal();
      s += g * g;
    }
    return z / std::sqrt(s / dof);
  }

  // Symmetric two-sided Pareto: |X| = U^{-1/r}, sign fair.
  double sym_pareto(double r) {
    double mag = std::pow(uniform(), -1.0 / r);
    return coin() ? mag : -mag;
  }

  // Wichura's AS241 (PPND16): inverse standard normal CDF, ~1e-16 accurate.
  static double normal_quantile(double p);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  SeedStream stream_;
  std::uint64_t state_[4] = {};
};

// Standard normal CDF via erfc.
double normal_cdf(double x);

}  // namespace siplab
