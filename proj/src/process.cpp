#include "siplab/process.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "siplab/numtheory.hpp"
#include "siplab/transfer.hpp"

namespace siplab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

// ---------- FourierSpec ----------

double FourierSpec::eval(double x) const {
  // cos(k theta) by the Chebyshev three-term recurrence; validated against
  // direct summation in the tests.
  double theta = kTwoPi * x;
  double c1 = std::cos(theta);
  double ckm1 = 1.0, ck = c1;
  double s = 0.0;
  for (std::size_t k = 1; k <= coeffs.size(); ++k) {
    s += 2.0 * coeffs[k - 1] * ck;
    double next = 2.0 * c1 * ck - ckm1;
    ckm1 = ck;
    ck = next;
  }
  return s;
}

FourierSpec FourierSpec::single_mode(int k, double c) {
  if (k < 1) throw std::invalid_argument("fourier mode index must be >= 1");
  FourierSpec f;
  f.coeffs.assign(k, 0.0);
  f.coeffs[k - 1] = c;
  return f;
}

FourierSpec FourierSpec::power_law(double s, double eps, int k_trunc) {
  if (k_trunc < 1) throw std::invalid_argument("k_trunc must be >= 1");
  FourierSpec f;
  f.coeffs.resize(k_trunc);
  for (int k = 1; k <= k_trunc; ++k)
    f.coeffs[k - 1] =
        std::pow(k, -s) * std::pow(std::log(1.0 + k), -(1.0 + eps));
  return f;
}

// ---------- spec plumbing ----------

std::string family_name(const ProcessSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DmrSpec>) return "dmr";
        else if constexpr (std::is_same_v<T, CircleSpec>) return "circle";
        else if constexpr (std::is_same_v<T, ArlSpec>) return "arl";
        else if constexpr (std::is_same_v<T, PmSpec>) return "pm";
        else return "linear";
      },
      spec);
}

std::string params_json(const ProcessSpec& spec) {
  nlohmann::json j;
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DmrSpec>) {
          j["a"] = s.a;
          j["f_id"] = s.f_id;
        } else if constexpr (std::is_same_v<T, CircleSpec>) {
          j["a_id"] = s.a_id;
          j["k_trunc"] = s.fourier.k_trunc();
          j["coeffs"] = s.fourier.coeffs;
        } else if constexpr (std::is_same_v<T, ArlSpec>) {
          j["C"] = s.C;
          j["delta"] = s.delta;
          j["S"] = s.S;
          j["innovation"] = s.innovation;
          j["t_dof"] = s.t_dof;
          j["pareto_r"] = s.pareto_r;
          j["holder_gamma"] = s.holder_gamma;
          j["burn_in"] = s.burn_in;
        } else if constexpr (std::is_same_v<T, PmSpec>) {
          j["gamma"] = s.gamma;
          j["f_id"] = s.f_id;
          j["ulam_cells"] = s.ulam_cells;
          j["burn_in"] = s.burn_in;
        } else {
          j["alpha"] = s.alpha;
          j["u_seq"] = s.u_seq;
          j["innovation"] = s.innovation;
          j["lag_trunc"] = s.lag_trunc;
        }
      },
      spec);
  return j.dump();
}

void validate(const ProcessSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DmrSpec>) {
          if (!(s.a > 0.0)) throw std::invalid_argument("dmr: a must be > 0");
          if (s.f_id != "sqrt_sign")
            throw std::invalid_argument("dmr: unknown f_id " + s.f_id);
        } else if constexpr (std::is_same_v<T, CircleSpec>) {
          if (s.fourier.k_trunc() < 1)
            throw std::invalid_argument("circle: K_trunc must be >= 1");
          irrational_value(s.a_id);  // throws on unknown id
        } else if constexpr (std::is_same_v<T, ArlSpec>) {
          if (!(s.C > 0.0 && s.C <= 1.0))
            throw std::invalid_argument("arl: C must be in (0,1]");
          if (!(s.delta >= 0.0 && s.delta < 1.0))
            throw std::invalid_argument("arl: delta must be in [0,1)");
          if (!(s.S >= 1.0)) throw std::invalid_argument("arl: S must be >= 1");
          if (s.innovation == "student_t" && s.t_dof <= s.S)
            throw std::invalid_argument("arl: student_t needs dof > S");
          if (s.innovation == "sym_pareto" && s.pareto_r <= s.S)
            throw std::invalid_argument("arl: sym_pareto needs r > S");
        } else if constexpr (std::is_same_v<T, PmSpec>) {
          if (!(s.gamma > 0.0 && s.gamma < 1.0))
            throw std::invalid_argument("pm: gamma must be in (0,1)");
          if (s.ulam_cells < 64)
            throw std::invalid_argument("pm: ulam_cells must be >= 64");
        } else {
          if (!(s.alpha > 0.0)) throw std::invalid_argument("linear: alpha must be > 0");
          if (s.u_seq != "zero" && s.u_seq != "alt06" && s.u_seq != "iid")
            throw std::invalid_argument("linear: unknown u_seq " + s.u_seq);
        }
      },
      spec);
}

// ---------- model functions ----------

double dmr_f(double x) {
  return x >= 0.0 ? std::sqrt(x) : -std::sqrt(-x);
}

double arl_h(const ArlSpec& s, double t) {
  if (s.delta == 0.0) return (1.0 - s.C) * t;
  double at = std::fabs(t);
  double pull = s.C * (std::pow(1.0 + at, 1.0 - s.delta) - 1.0) / (1.0 - s.delta);
  return t - std::copysign(pull, t);
}

double arl_observable(const ArlSpec& s, double y) {
  double m = std::min(std::fabs(y), s.cap);
  double v = s.holder_gamma == 1.0 ? m : std::pow(m, s.holder_gamma);
  return std::copysign(v, y);
}

double arl_innovation(const ArlSpec& s, Rng& rng) {
  if (s.innovation == "gaussian") return rng.normal();
  if (s.innovation == "student_t") return rng.student_t(s.t_dof);
  if (s.innovation == "sym_pareto") return rng.sym_pareto(s.pareto_r);
  throw std::invalid_argument("arl: unknown innovation " + s.innovation);
}

double pm_map(double gamma, double x) {
  if (x < 0.5) return x * (1.0 + std::pow(2.0 * x, gamma));
  return 2.0 * x - 1.0;
}

double pm_map_left_inverse(double gamma, double y) {
  // solve z (1 + 2^g z^g) = y on [0, 1/2]; T' >= 1 there so Newton from the
  // bracket midpoint converges fast, with bisection as the safety net
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 0.5;
  double lo = 0.0, hi = 0.5;
  double z = 0.5 * y;
  for (int it = 0; it < 200; ++it) {
    double zg = std::pow(2.0 * z, gamma);
    double val = z * (1.0 + zg) - y;
    if (std::fabs(val) < 1e-15) return z;
    if (val > 0.0) hi = z; else lo = z;
    double deriv = 1.0 + (1.0 + gamma) * zg;
    double step = z - val / deriv;
    z = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
  }
  if (hi - lo > 1e-12)
    throw std::runtime_error("pm left-branch inverse failed to converge");
  return z;
}

double circle_rotation(const CircleSpec& s) { return irrational_value(s.a_id); }

double circle_sigma2_from_eigenvalues(const std::vector<double>& coeffs,
                                      const std::vector<double>& lambdas) {
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    double lam = lambdas[k];
    if (1.0 - lam < 1e-14) throw std::runtime_error("resonant frequency");
    s += 2.0 * coeffs[k] * coeffs[k] * (1.0 + lam) / (1.0 - lam);
  }
  return s;
}

double circle_sigma2_exact(const CircleSpec& s) {
  std::vector<double> lam(s.fourier.k_trunc());
  for (int k = 1; k <= s.fourier.k_trunc(); ++k)
    lam[k - 1] = std::cos(kTwoPi * frac_k_times_a(k, s.a_id));
  return circle_sigma2_from_eigenvalues(s.fourier.coeffs, lam);
}

std::vector<double> linear_filter(const LinearSpec& s, double tail_rel_target, long cap) {
  if (s.u_seq == "iid") return {1.0};
  auto coeff = [&](long k) -> double {
    double u = (s.u_seq == "alt06") ? std::pow(k + 1.0, -0.6) : 0.0;
    if (k == 0) return 1.0 + u;
    double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    return std::pow(static_cast<double>(k), -(s.alpha + 1.0)) + sgn * u;
  };
  long hard_cap = s.lag_trunc > 0 ? s.lag_trunc : cap;
  std::vector<double> a;
  a.reserve(256);
  double total = 0.0;
  for (long k = 0; k <= hard_cap; ++k) {
    a.push_back(coeff(k));
    total += a.back() * a.back();
  }
  if (s.lag_trunc > 0) return a;
  // l2 mass of the filter beyond the cap (integral bounds on both pieces)
  double beyond = std::pow((double)hard_cap, -(2.0 * s.alpha + 1.0)) /
                  (2.0 * s.alpha + 1.0) * 2.0;
  if (s.u_seq == "alt06")
    beyond += 2.0 * std::pow((double)hard_cap, -0.2) / 0.2;
  // shrink to the smallest J whose discarded l2 tail stays below target
  double tail = beyond;
  long J = hard_cap;
  while (J > 0 && tail + a[J] * a[J] <= tail_rel_target * total) {
    tail += a[J] * a[J];
    --J;
  }
  if (J >= hard_cap)
    throw std::invalid_argument(
        "linear: filter l2 tail exceeds the 1e-6 target at the lag cap; "
        "set lag_trunc explicitly for slowly decaying u sequences");
  a.resize(J + 1);
  return a;
}

// ---------- per-family paths ----------

void dmr_sample_path(const DmrSpec& s, long n, Rng& rng, double* states, double* xs) {
  // exact stationary start: |x| = U^{1/a}, sign fair
  double x = std::pow(rng.uniform(), 1.0 / s.a);
  if (!rng.coin()) x = -x;
  states[0] = x;
  for (long k = 1; k <= n; ++k) {
    double ax = std::fabs(x);
    if (rng.uniform() < ax) {  // jump: fresh draw from upsilon
      double mag = std::pow(rng.uniform(), 1.0 / (s.a + 1.0));
      x = rng.coin() ? mag : -mag;
    }
    states[k] = x;
    xs[k - 1] = dmr_f(x);
  }
}

void circle_sample_path(const CircleSpec& s, long n, Rng& rng, double* states,
                        double* xs) {
  const double a = circle_rotation(s);
  double xi = rng.uniform();
  if (xi >= 1.0) xi = 0.0;
  states[0] = xi;
  for (long k = 1; k <= n; ++k) {
    xi += rng.coin() ? a : -a;
    xi -= std::floor(xi);
    states[k] = xi;
    xs[k - 1] = s.fourier.eval(xi);
  }
}

void arl_sample_path(const ArlSpec& s, long n, Rng& rng, double* states, double* xs) {
  double y = 0.0;
  for (long b = 0; b < s.burn_in; ++b) y = arl_h(s, y) + arl_innovation(s, rng);
  states[0] = y;
  for (long k = 1; k <= n; ++k) {
    y = arl_h(s, y) + arl_innovation(s, rng);
    states[k] = y;
    xs[k - 1] = arl_observable(s, y);
  }
}

void pm_sample_path(const PmSpec& s, long n, Rng& rng, double* states, double* xs,
                    double f_mean) {
  double x = rng.uniform();
  for (long b = 0; b < s.burn_in; ++b) x = pm_map(s.gamma, x);
  // forward orbit, then reversed: the reversed orbit is a stationary path of
  // the chain with the Perron-Frobenius kernel
  std::vector<double> orbit(n + 1);
  orbit[0] = x;
  for (long k = 1; k <= n; ++k) orbit[k] = pm_map(s.gamma, orbit[k - 1]);
  for (long k = 0; k <= n; ++k) states[k] = orbit[n - k];
  for (long k = 1; k <= n; ++k)
    xs[k - 1] = (states[k] <= 0.5 ? 1.0 : 0.0) - f_mean;
}

void linear_sample_path(const LinearSpec& s, long n, long lag_trunc,
                        const std::vector<double>& filter, Rng& rng, double* innov,
                        double* xs) {
  const long total = lag_trunc + n + 1;  // eps_{-J} .. eps_n
  for (long i = 0; i < total; ++i) {
    if (s.innovation == "gaussian") innov[i] = rng.normal();
    else if (s.innovation == "student_t") innov[i] = rng.student_t(s.t_dof);
    else throw std::invalid_argument("linear: unknown innovation " + s.innovation);
  }
  const long J = static_cast<long>(filter.size()) - 1;
  for (long k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (long j = 0; j <= J; ++j) acc += filter[j] * innov[lag_trunc + k - j];
    xs[k - 1] = acc;
  }
}

// ---------- batch drivers ----------

namespace {

TrajectoryBatch simulate_impl(const ProcessSpec& spec, long n, std::size_t replicas,
                              std::uint64_t root_seed, bool parallel) {
  validate(spec);
  if (n < 1 || replicas < 1) throw std::invalid_argument("batch needs n, R >= 1");
  TrajectoryBatch b;
  b.replicas = replicas;
  b.length = static_cast<std::size_t>(n);
  b.values.resize(replicas * b.length);
  b.seeds.resize(replicas);
  for (std::size_t r = 0; r < replicas; ++r)
    b.seeds[r] = SeedStream{root_seed, stream_domain::kSimulate + r};

  const bool is_linear = std::holds_alternative<LinearSpec>(spec);
  std::vector<double> filter;
  double pm_mean = 0.0;
  if (is_linear) {
    filter = linear_filter(std::get<LinearSpec>(spec));
    b.lag_trunc = static_cast<long>(filter.size()) - 1;
    b.innovations.resize(replicas * (b.lag_trunc + b.length + 1));
  } else {
    b.states.resize(replicas * (b.length + 1));
  }
  if (const auto* pm = std::get_if<PmSpec>(&spec)) {
    pm_mean = pm_invariant_mean_indicator(*pm);
    b.burn_in = pm->burn_in;
  }
  if (const auto* arl = std::get_if<ArlSpec>(&spec)) b.burn_in = arl->burn_in;

  auto one_row = [&](std::size_t r) {
    Rng rng(b.seeds[r]);
    double* xs = b.values.data() + r * b.length;
    if (is_linear) {
      double* innov = b.innovations.data() + r * (b.lag_trunc + b.length + 1);
      linear_sample_path(std::get<LinearSpec>(spec), n, b.lag_trunc, filter, rng,
                         innov, xs);
      return;
    }
    double* st = b.states.data() + r * (b.length + 1);
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DmrSpec>) dmr_sample_path(s, n, rng, st, xs);
          else if constexpr (std::is_same_v<T, CircleSpec>) circle_sample_path(s, n, rng, st, xs);
          else if constexpr (std::is_same_v<T, ArlSpec>) arl_sample_path(s, n, rng, st, xs);
          else if constexpr (std::is_same_v<T, PmSpec>) pm_sample_path(s, n, rng, st, xs, pm_mean);
        },
        spec);
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long r = 0; r < static_cast<long>(replicas); ++r) one_row(r);
  } else {
    for (std::size_t r = 0; r < replicas; ++r) one_row(r);
  }
  b.validate();
  return b;
}

}  // namespace

TrajectoryBatch simulate_batch(const ProcessSpec& spec, long n, std::size_t replicas,
                               std::uint64_t root_seed) {
  return simulate_impl(spec, n, replicas, root_seed, true);
}

TrajectoryBatch simulate_batch_serial(const ProcessSpec& spec, long n,
                                      std::size_t replicas, std::uint64_t root_seed) {
  return simulate_impl(spec, n, replicas, root_seed, false);
}

}  // namespace siplab
