#include "siplab/numtheory.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace siplab {

namespace {

using mp = boost::multiprecision::cpp_bin_float_50;
using bigint = boost::multiprecision::cpp_int;

mp mp_value(const std::string& id) {
  if (id == "golden") return (sqrt(mp(5)) - 1) / 2;
  if (id == "sqrt2") return sqrt(mp(2)) - 1;
  if (id == "cbrt2") return boost::multiprecision::pow(mp(2), mp(1) / 3) - 1;
  if (id == "half") return mp(1) / 2;
  if (id == "third") return mp(1) / 3;
  throw std::invalid_argument("unknown irrational id: " + id);
}

mp frac(const mp& x) {
  mp f = x - floor(x);
  return f;
}

ContinuedFraction cf_expand(mp a, int depth) {
  ContinuedFraction cf;
  // a in (0,1): a_0 = 0.
  cf.quotients.push_back(0);
  bigint pm1 = 1, qm1 = 0;  // p_{-1}, q_{-1}
  bigint p0 = 0, q0 = 1;    // p_0 = a_0 = 0, q_0 = 1
  cf.p.push_back(0);
  cf.q.push_back(1);
  mp x = a;
  const mp eps = mp(1e-45);
  for (int j = 1; j <= depth; ++j) {
    if (x < eps) {  // rational input exhausted
      cf.terminated = true;
      return cf;
    }
    mp inv = 1 / x;
    mp fl = floor(inv);
    // Certify the quotient: the accumulated error is of order q_j^2 * 1e-50,
    // so stop once convergent denominators reach the certification limit.
    if (q0 > bigint(1) << 60 || fl > mp(1e15))
      throw std::runtime_error(
          "precision exhausted in continued fraction; safe depth is " +
          std::to_string(j - 1));
    auto aj = static_cast<std::int64_t>(fl.convert_to<double>());
    cf.quotients.push_back(aj);
    bigint pn = aj * p0 + pm1;
    bigint qn = aj * q0 + qm1;
    if (pn > bigint(std::int64_t(1) << 62) || qn > bigint(std::int64_t(1) << 62))
      throw std::runtime_error(
          "convergents exceed int64 range; safe depth is " + std::to_string(j - 1));
    cf.p.push_back(pn.convert_to<std::int64_t>());
    cf.q.push_back(qn.convert_to<std::int64_t>());
    pm1 = p0; qm1 = q0; p0 = pn; q0 = qn;
    x = inv - fl;
    if (x < eps) {  // within certified range an exact quotient means rational
      cf.terminated = true;
      return cf;
    }
  }
  return cf;
}

mp dist_mp(std::int64_t k, const mp& a) {
  mp f = frac(k * a);
  return f < mp(0.5) ? f : 1 - f;
}

}  // namespace

double irrational_value(const std::string& id) {
  return frac(mp_value(id)).convert_to<double>();
}

bool is_known_irrational(const std::string& id) {
  return id == "golden" || id == "sqrt2" || id == "cbrt2";
}

ContinuedFraction continued_fraction(const std::string& a_id, int depth) {
  return cf_expand(frac(mp_value(a_id)), depth);
}

ContinuedFraction continued_fraction_of(double a, int depth) {
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument("continued_fraction expects a in (0,1)");
  return cf_expand(mp(a), depth);
}

double dist_to_lattice(std::int64_t k, const std::string& a_id) {
  if (k == 0) throw std::invalid_argument("dist_to_lattice needs |k| >= 1");
  // 50 digits leave ~44 after multiplying by k <= 1e6; refuse far beyond that.
  if (std::llabs(k) > (1LL << 40))
    throw std::invalid_argument("k beyond the certified precision range");
  return dist_mp(std::llabs(k), mp_value(a_id)).convert_to<double>();
}

double frac_k_times_a(std::int64_t k, const std::string& a_id) {
  if (std::llabs(k) > (1LL << 40))
    throw std::invalid_argument("k beyond the certified precision range");
  return frac(mp(k) * mp_value(a_id)).convert_to<double>();
}

ParouxSeries paroux_series(const std::vector<double>& fhat_abs,
                           const std::string& a_id, long k_max) {
  ParouxSeries out;
  const mp a = mp_value(a_id);
  double running = 0.0;
  long block_end = 2;
  double block_max = 0.0;
  long limit = std::min<long>(k_max, static_cast<long>(fhat_abs.size()));
  for (long k = 1; k <= limit; ++k) {
    double d = dist_mp(k, a).convert_to<double>();
    double term = 0.0;
    if (d > 0.0) {
      double c = fhat_abs[k - 1];
      term = 2.0 * c * c / (d * d);  // modes +-k
      running += term;
    } else {
      running = std::numeric_limits<double>::infinity();  // rational resonance
    }
    block_max = std::max(block_max, term);
    if (k == block_end || k == limit) {
      out.block_ends.push_back(k);
      out.partial_sums.push_back(running);
      out.block_max_term.push_back(block_max);
      block_max = 0.0;
      block_end *= 2;
    }
  }
  out.total = running;
  // Convergent if per-block contributions die out; diverging block maxima or
  // non-vanishing block sums flag failure of the criterion.
  std::size_t nb = out.block_ends.size();
  if (nb >= 3) {
    double last_inc = out.partial_sums[nb - 1] - out.partial_sums[nb - 2];
    double prev_inc = out.partial_sums[nb - 2] - out.partial_sums[nb - 3];
    double tail_frac = (out.total > 0) ? last_inc / out.total : 0.0;
    if (!std::isfinite(out.total) || (last_inc >= prev_inc && tail_frac > 0.05))
      out.verdict = "diverges";
    else if (tail_frac < 0.02 && last_inc <= prev_inc)
      out.verdict = "converges";
    else
      out.verdict = "inconclusive";
  } else {
    out.verdict = "inconclusive";
  }
  return out;
}

BadlyApproxReport badly_approximable_report(const std::string& a_id, std::int64_t k_max) {
  BadlyApproxReport rep;
  const mp a = mp_value(a_id);
  rep.c_hat = std::numeric_limits<double>::infinity();
  std::vector<double> ks, kds;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    double kd = static_cast<double>(k) * dist_mp(k, a).convert_to<double>();
    if (kd < rep.c_hat) {
      rep.c_hat = kd;
      rep.argmin_k = k;
    }
    if ((k & (k - 1)) == 0) {  // dyadic subsample for the trend fit
      ks.push_back(static_cast<double>(k));
      kds.push_back(std::max(kd, 1e-300));
    }
  }
  if (ks.size() >= 3) rep.trend = loglog_rate_fit(ks, kds);
  return rep;
}

}  // namespace siplab
