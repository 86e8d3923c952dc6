#include "siplab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "siplab/dmr_oracle.hpp"
#include "siplab/io.hpp"

namespace siplab {

namespace {

class TwoPointLaw : public CenteredLaw {
 public:
  TwoPointLaw(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo < 0.0 && hi > 0.0))
      throw std::invalid_argument("two-point law needs lo < 0 < hi");
    q_ = hi / (hi - lo);  // mass at lo, so the mean vanishes
  }
  double cdf(double t) const override {
    if (t < lo_) return 0.0;
    if (t < hi_) return q_;
    return 1.0;
  }
  double cdf_left(double t) const override {
    if (t <= lo_) return 0.0;
    if (t <= hi_) return q_;
    return 1.0;
  }
  double quantile(double level) const override { return level <= q_ ? lo_ : hi_; }

 private:
  double lo_, hi_, q_;
};

class UniformCenteredLaw : public CenteredLaw {
 public:
  explicit UniformCenteredLaw(double h) : h_(h) {}
  double cdf(double t) const override {
    return std::clamp((t + h_) / (2.0 * h_), 0.0, 1.0);
  }
  double cdf_left(double t) const override { return cdf(t); }
  double quantile(double level) const override { return -h_ + 2.0 * h_ * level; }

 private:
  double h_;
};

class GaussianLaw : public CenteredLaw {
 public:
  explicit GaussianLaw(double sigma) : sigma_(sigma) {}
  double cdf(double t) const override { return normal_cdf(t / sigma_); }
  double cdf_left(double t) const override { return cdf(t); }
  double quantile(double level) const override {
    return sigma_ * Rng::normal_quantile(level);
  }

 private:
  double sigma_;
};

class DmrStepLaw : public CenteredLaw {
 public:
  DmrStepLaw(std::shared_ptr<const DmrOracle> oracle, double state)
      : oracle_(std::move(oracle)), x_(state) {}
  double cdf(double t) const override { return oracle_->d_cond_cdf(x_, t); }
  double cdf_left(double t) const override { return oracle_->d_cond_cdf_left(x_, t); }
  double quantile(double level) const override {
    return oracle_->d_cond_quantile(x_, level);
  }

 private:
  std::shared_ptr<const DmrOracle> oracle_;
  double x_;
};

class RademacherProcess : public StepLawProcess {
 public:
  std::unique_ptr<CenteredLaw> law(double) const override {
    return two_point_law(-1.0, 1.0);
  }
  double step_variance() const override { return 1.0; }
};

class IidUniformProcess : public StepLawProcess {
 public:
  std::unique_ptr<CenteredLaw> law(double) const override {
    return uniform_centered_law(std::sqrt(3.0));
  }
  double step_variance() const override { return 1.0; }
};

class IidGaussianProcess : public StepLawProcess {
 public:
  std::unique_ptr<CenteredLaw> law(double) const override {
    return gaussian_law(1.0);
  }
  double step_variance() const override { return 1.0; }
};

class DmrStepProcess : public StepLawProcess {
 public:
  explicit DmrStepProcess(const DmrSpec& spec)
      : oracle_(std::make_shared<DmrOracle>(spec)), a_(spec.a) {}
  std::unique_ptr<CenteredLaw> law(double state) const override {
    return std::make_unique<DmrStepLaw>(oracle_, state);
  }
  double next_state(double state, double step) const override {
    // the atom value marks "stay"; otherwise invert w = f(z)/|z|
    double atom = DmrOracle::f(state);
    if (step == atom) return state;
    double w = step + oracle_->g_R(state);  // w = d - c(x), c = -g_R
    double mag = 1.0 / (w * w);
    return std::copysign(mag, w);
  }
  double initial_state(Rng& rng) const override {
    double mag = std::pow(rng.uniform(), 1.0 / a_);
    return rng.coin() ? mag : -mag;
  }
  double step_variance() const override { return oracle_->e_d_squared(); }

 private:
  std::shared_ptr<DmrOracle> oracle_;
  double a_;
};

}  // namespace

std::unique_ptr<CenteredLaw> two_point_law(double lo, double hi) {
  return std::make_unique<TwoPointLaw>(lo, hi);
}
std::unique_ptr<CenteredLaw> uniform_centered_law(double half_width) {
  return std::make_unique<UniformCenteredLaw>(half_width);
}
std::unique_ptr<CenteredLaw> gaussian_law(double sigma) {
  return std::make_unique<GaussianLaw>(sigma);
}

std::unique_ptr<StepLawProcess> rademacher_process() {
  return std::make_unique<RademacherProcess>();
}
std::unique_ptr<StepLawProcess> iid_uniform_process() {
  return std::make_unique<IidUniformProcess>();
}
std::unique_ptr<StepLawProcess> iid_gaussian_process() {
  return std::make_unique<IidGaussianProcess>();
}
std::unique_ptr<StepLawProcess> dmr_step_process(const DmrSpec& spec) {
  return std::make_unique<DmrStepProcess>(spec);
}

// ---------- quantile coupling ----------

namespace {

double transform_to_normal(double f_left, double f_right, double sigma, Rng& rng) {
  double u = f_left;
  if (f_right > f_left) u += rng.uniform() * (f_right - f_left);  // atoms randomized
  u = std::clamp(u, 1e-16, 1.0 - 1e-16);
  return sigma * Rng::normal_quantile(u);
}

}  // namespace

QuantileCoupleResult quantile_couple(const ProcessSpec& spec,
                                     const TrajectoryBatch& batch,
                                     std::size_t replica, double sigma2, Rng& rng) {
  const auto* dmr = std::get_if<DmrSpec>(&spec);
  if (!dmr)
    throw std::invalid_argument(
        "conditional CDF accessor unavailable for family " + family_name(spec));
  DmrOracle oracle(*dmr);
  const double* st = batch.state_row(replica);
  const long n = static_cast<long>(batch.length);
  QuantileCoupleResult out;
  out.z.resize(n);
  out.u.resize(n);
  double sigma = std::sqrt(sigma2);
  for (long k = 1; k <= n; ++k) {
    double d = oracle.d_closed(st[k - 1], st[k]);
    double fl = oracle.d_cond_cdf_left(st[k - 1], d);
    double fr = oracle.d_cond_cdf(st[k - 1], d);
    double u = fl;
    if (fr > fl) u += rng.uniform() * (fr - fl);
    out.u[k - 1] = u;
    u = std::clamp(u, 1e-16, 1.0 - 1e-16);
    out.z[k - 1] = sigma * Rng::normal_quantile(u);
  }
  return out;
}

QuantileCoupleResult quantile_couple_iid(const StepLawProcess& proc,
                                         const std::vector<double>& d_path,
                                         double sigma2, Rng& rng) {
  auto law = proc.law(0.0);
  QuantileCoupleResult out;
  out.z.resize(d_path.size());
  out.u.resize(d_path.size());
  double sigma = std::sqrt(sigma2);
  for (std::size_t k = 0; k < d_path.size(); ++k) {
    double fl = law->cdf_left(d_path[k]);
    double fr = law->cdf(d_path[k]);
    double u = fl;
    if (fr > fl) u += rng.uniform() * (fr - fl);
    out.u[k] = u;
    u = std::clamp(u, 1e-16, 1.0 - 1e-16);
    out.z[k] = sigma * Rng::normal_quantile(u);
  }
  return out;
}

// ---------- Skorokhod embedding ----------

SkorokhodPath skorokhod_embed(const StepLawProcess& proc, long n_steps,
                              const SkorokhodOptions& opts, Rng& rng) {
  SkorokhodPath out;
  out.d.reserve(n_steps);
  out.m.reserve(n_steps);
  out.taus.reserve(n_steps);
  out.z.reserve(n_steps);

  const double sigma2 = opts.sigma2;
  const double dt = sigma2 / opts.dt_divisor;
  double T = 0.0;       // global Brownian time
  double B = 0.0;       // Brownian value
  double slot_time = sigma2;
  double slot_prev_value = 0.0;
  double state = proc.initial_state(rng);

  auto record_slots_until = [&](double t_new, double b_new) {
    // slot boundaries are hit exactly: the stepper never strides across one
    if (t_new >= slot_time - 1e-12 * sigma2) {
      if (out.z.size() < static_cast<std::size_t>(n_steps))
        out.z.push_back(b_new - slot_prev_value);
      slot_prev_value = b_new;
      slot_time += sigma2;
    }
  };

  // advance plain BM to the next sub-step edge; returns the new value
  auto bm_substep = [&](double target_time) {
    double gap = std::max(0.0, target_time - T);
    double g = std::sqrt(gap) * rng.normal();
    return B + g;
  };

  for (long i = 0; i < n_steps; ++i) {
    const double step_start_time = T;
    auto law = proc.law(state);
    double p0 = law->atom_at_zero();
    if (p0 > 0.0 && rng.uniform() < p0) {
      out.d.push_back(0.0);
      out.m.push_back(B);
      out.taus.push_back(0.0);
      continue;
    }
    double pneg = law->prob_neg(), ppos = law->prob_pos();
    double lo_level = opts.tail_eps * pneg;
    double hi_level = 1.0 - opts.tail_eps * ppos;
    double qlo = law->quantile(std::max(lo_level, 1e-300));
    double qhi = law->quantile(hi_level);
    double M = qhi - qlo;
    out.truncated_mass += opts.tail_eps * (pneg + ppos);

    double u = 0.0, v = 0.0;
    long tries = 0;
    for (;;) {
      if (++tries > opts.max_rejections)
        throw std::runtime_error(
            "rejection sampler efficiency below floor; tabulate the step law");
      double ul = lo_level + (pneg - lo_level) * rng.uniform();
      double vl = (1.0 - ppos) + (hi_level - (1.0 - ppos)) * rng.uniform();
      u = law->quantile(ul);
      v = law->quantile(vl);
      if (rng.uniform() * M <= (v - u)) break;
    }

    // run BM until exit of [B0+u, B0+v]
    const double lo_b = B + u, hi_b = B + v;
    double hit = 0.0;
    bool done = false;
    while (!done) {
      double t_next = std::min(T + dt, slot_time);
      double b_next = bm_substep(t_next);
      bool crossed = b_next >= hi_b || b_next <= lo_b;
      double cross_time = t_next;
      double cross_val = b_next >= hi_b ? hi_b : lo_b;
      if (!crossed) {
        // Brownian-bridge crossing test inside the sub-step
        double gap = t_next - T;
        double dhi = (hi_b - B) * (hi_b - b_next);
        double dlo = (B - lo_b) * (b_next - lo_b);
        double phi = dhi < 20.0 * gap ? std::exp(-2.0 * dhi / gap) : 0.0;
        double plo = dlo < 20.0 * gap ? std::exp(-2.0 * dlo / gap) : 0.0;
        double r = rng.uniform();
        if (r < phi) {
          crossed = true;
          cross_val = hi_b;
          cross_time = 0.5 * (T + t_next);
        } else if (r < phi + plo) {
          crossed = true;
          cross_val = lo_b;
          cross_time = 0.5 * (T + t_next);
        }
      } else {
        // bisection refinement of the first boundary passage
        double t0 = T, b0 = B, t1 = t_next, b1 = b_next;
        for (int lev = 0; lev < opts.refine_levels; ++lev) {
          double tm = 0.5 * (t0 + t1);
          double bm = 0.5 * (b0 + b1) + 0.5 * std::sqrt(t1 - t0) * rng.normal();
          if (bm >= hi_b || bm <= lo_b) {
            t1 = tm;
            b1 = bm;
          } else {
            t0 = tm;
            b0 = bm;
          }
        }
        cross_time = t1;
        cross_val = b1 >= hi_b ? hi_b : lo_b;
      }
      if (crossed) {
        out.taus.push_back(cross_time - step_start_time);
        T = cross_time;
        B = cross_val;
        hit = cross_val;
        done = true;
      } else {
        record_slots_until(t_next, b_next);
        T = t_next;
        B = b_next;
      }
    }
    double d = hit - (out.m.empty() ? 0.0 : out.m.back());
    out.d.push_back(d);
    out.m.push_back(hit);
    state = proc.next_state(state, d);
  }

  // keep running plain BM until every slot up to n_steps is recorded
  while (out.z.size() < static_cast<std::size_t>(n_steps)) {
    double t_next = std::min(T + dt, slot_time);
    double b_next = bm_substep(t_next);
    record_slots_until(t_next, b_next);
    T = t_next;
    B = b_next;
  }
  return out;
}

// ---------- sup deviation ----------

std::vector<double> measure_sup_deviation(const std::vector<double>& s_steps,
                                          const std::vector<double>& z_steps,
                                          const std::vector<long>& horizons) {
  if (s_steps.size() != z_steps.size())
    throw std::invalid_argument("sup deviation: length mismatch");
  std::vector<double> out(horizons.size());
  double s = 0.0, z = 0.0, running = 0.0;
  std::size_t hi = 0;
  for (std::size_t k = 0; k < s_steps.size() && hi < horizons.size(); ++k) {
    s += s_steps[k];
    z += z_steps[k];
    running = std::max(running, std::fabs(s - z));
    while (hi < horizons.size() &&
           static_cast<std::size_t>(horizons[hi]) == k + 1) {
      out[hi] = running;
      ++hi;
    }
  }
  if (hi != horizons.size())
    throw std::invalid_argument("sup deviation: horizon beyond the path length");
  return out;
}

void CouplingResult::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  w.header({"horizon", "mean_sup_dev", "median_sup_dev", "stderr"});
  for (std::size_t i = 0; i < horizons.size(); ++i)
    w.raw_row({std::to_string(horizons[i]), CsvWriter::format_double(mean_sup[i]),
               CsvWriter::format_double(median_sup[i]),
               CsvWriter::format_double(stderr_sup[i])});
}

std::string CouplingResult::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["horizons"] = horizons;
  j["mean_sup_dev"] = mean_sup;
  j["median_sup_dev"] = median_sup;
  j["stderr"] = stderr_sup;
  j["sigma2_used"] = sigma2_used;
  j["rate_fit"] = {{"slope", rate.slope},
                   {"intercept", rate.intercept},
                   {"r2", rate.r2},
                   {"slope_stderr", rate.slope_stderr}};
  return j.dump(2);
}

CouplingResult couple_experiment(const CoupleExperimentOptions& opts) {
  if (opts.horizons.empty()) throw std::invalid_argument("couple: no horizons");
  long n = *std::max_element(opts.horizons.begin(), opts.horizons.end());

  std::unique_ptr<StepLawProcess> proc;
  if (opts.family == "rademacher") proc = rademacher_process();
  else if (opts.family == "iid_gauss") proc = iid_gaussian_process();
  else if (opts.family == "iid_uniform") proc = iid_uniform_process();
  else if (opts.family == "dmr") proc = dmr_step_process(opts.dmr);
  else throw std::invalid_argument("couple: unknown family " + opts.family);

  const double sigma2 = proc->step_variance();
  CouplingResult res;
  res.method = opts.method == "skorokhod" ? "skorokhod-exit" : "quantile-per-step";
  res.horizons = opts.horizons;
  res.sigma2_used = sigma2;
  res.raw.assign(opts.replicas, {});

  if (opts.method == "skorokhod") {
    SkorokhodOptions sk = opts.sk;
    sk.sigma2 = sigma2;
#pragma omp parallel for schedule(static)
    for (long r = 0; r < static_cast<long>(opts.replicas); ++r) {
      Rng rng(SeedStream{opts.seed,
                         stream_domain::kCoupling + static_cast<std::uint64_t>(r)});
      SkorokhodPath path = skorokhod_embed(*proc, n, sk, rng);
      res.raw[r] = measure_sup_deviation(path.d, path.z, opts.horizons);
    }
  } else if (opts.method == "quantile") {
    if (opts.family == "dmr") {
      TrajectoryBatch batch = simulate_batch(opts.dmr, n, opts.replicas, opts.seed);
#pragma omp parallel for schedule(static)
      for (long r = 0; r < static_cast<long>(opts.replicas); ++r) {
        Rng rng(SeedStream{opts.seed,
                           stream_domain::kCoupling + static_cast<std::uint64_t>(r)});
        DmrOracle oracle(opts.dmr);
        const double* st = batch.state_row(r);
        std::vector<double> d(n);
        for (long k = 1; k <= n; ++k) d[k - 1] = oracle.d_closed(st[k - 1], st[k]);
        auto qc = quantile_couple(opts.dmr, batch, r, sigma2, rng);
        res.raw[r] = measure_sup_deviation(d, qc.z, opts.horizons);
      }
    } else {
#pragma omp parallel for schedule(static)
      for (long r = 0; r < static_cast<long>(opts.replicas); ++r) {
        Rng rng(SeedStream{opts.seed,
                           stream_domain::kCoupling + static_cast<std::uint64_t>(r)});
        auto law = proc->law(0.0);
        std::vector<double> d(n);
        for (long k = 0; k < n; ++k) d[k] = law->quantile(rng.uniform());
        auto qc = quantile_couple_iid(*proc, d, sigma2, rng);
        res.raw[r] = measure_sup_deviation(d, qc.z, opts.horizons);
      }
    }
  } else {
    throw std::invalid_argument("couple: unknown method " + opts.method);
  }

  const std::size_t H = opts.horizons.size();
  res.mean_sup.resize(H);
  res.median_sup.resize(H);
  res.stderr_sup.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<double> col(opts.replicas);
    for (std::size_t r = 0; r < opts.replicas; ++r) col[r] = res.raw[r][h];
    res.mean_sup[h] = mean(col);
    res.stderr_sup[h] = opts.replicas > 1 ? stderr_of_mean(col) : 0.0;
    std::sort(col.begin(), col.end());
    res.median_sup[h] = col[col.size() / 2];
  }
  std::vector<double> hs(opts.horizons.begin(), opts.horizons.end());
  bool positive = std::all_of(res.mean_sup.begin(), res.mean_sup.end(),
                              [](double v) { return v > 0.0; });
  if (hs.size() >= 3 && positive) res.rate = loglog_rate_fit(hs, res.mean_sup);
  return res;
}

}  // namespace siplab
