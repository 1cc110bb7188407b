#include "stableweb/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "stableweb/errors.hpp"

namespace stableweb::sampling {

namespace {

// Kahan-compensated sum; the normalization invariant is 1e-12.
double stable_sum(const std::vector<double>& xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace

void validate(const StableLaw& law) {
  if (!(law.alpha > 1.0) || !(law.alpha < 2.0))
    throw ConfigError("StableLaw: alpha must lie in (1,2), got " +
                      std::to_string(law.alpha));
  if (!(law.scale > 0.0))
    throw ConfigError("StableLaw: scale must be positive, got " +
                      std::to_string(law.scale));
}

double sample_stable(const StableLaw& law, double dt, RngStream& rng) {
  validate(law);
  if (!(dt > 0.0))
    throw ConfigError("sample_stable: nonpositive duration " +
                      std::to_string(dt));
  const double a = law.alpha;
  const double u = std::numbers::pi * (rng.next_double() - 0.5);
  const double w = -std::log(rng.next_double());
  const double x = std::sin(a * u) / std::pow(std::cos(u), 1.0 / a) *
                   std::pow(std::cos((1.0 - a) * u) / w, (1.0 - a) / a);
  return law.scale * std::pow(dt, 1.0 / a) * x;
}

double IncrementLaw::p(long long x) const {
  long long ax = x < 0 ? -x : x;
  if (ax <= x_max) return probs[static_cast<std::size_t>(ax)];
  // Integral of the continuous envelope C y^-(1+alpha) over [|x|-1/2, |x|+1/2].
  double lo = static_cast<double>(ax) - 0.5;
  double hi = static_cast<double>(ax) + 0.5;
  return tail_constant / alpha *
         (std::pow(lo, -alpha) - std::pow(hi, -alpha));
}

double IncrementLaw::prob_abs_geq(long long m) const {
  if (m <= 0) return 1.0;
  if (m > x_max)
    return 2.0 * tail_constant / alpha * std::pow(m - 0.5, -alpha);
  double s = 0.0;
  for (long long x = x_max; x >= m; --x) s += probs[static_cast<std::size_t>(x)];
  return 2.0 * (s + tail_mass_per_side);
}

IncrementLaw build_increment_law(double alpha, double tail_constant,
                                 int x_max) {
  if (!(alpha > 1.0) || !(alpha < 2.0))
    throw ConfigError("IncrementLaw: alpha must lie in (1,2), got " +
                      std::to_string(alpha));
  if (!(tail_constant > 0.0))
    throw ConfigError("IncrementLaw: tail_constant must be positive");
  if (x_max < 10)
    throw ConfigError("IncrementLaw: x_max must be at least 10, got " +
                      std::to_string(x_max));

  IncrementLaw law;
  law.alpha = alpha;
  law.tail_constant = tail_constant;
  law.x_max = x_max;
  law.probs.assign(static_cast<std::size_t>(x_max) + 1, 0.0);
  std::vector<double> parts;
  for (int x = x_max; x >= 1; --x) {
    double px = tail_constant * std::pow(static_cast<double>(x), -(1.0 + alpha));
    law.probs[static_cast<std::size_t>(x)] = px;
    parts.push_back(2.0 * px);
  }
  law.tail_mass_per_side =
      tail_constant / alpha * std::pow(x_max + 0.5, -alpha);
  parts.push_back(2.0 * law.tail_mass_per_side);
  double off_zero = stable_sum(parts);
  if (off_zero >= 1.0)
    throw ConfigError(
        "IncrementLaw: tail_constant too large, off-zero mass " +
        std::to_string(off_zero) + " >= 1");
  law.p_zero = 1.0 - off_zero;
  law.probs[0] = law.p_zero;

  // Cumulative cells: 0, +1..+x_max, -1..-x_max, tail+, tail-.
  law.cdf.reserve(2 * static_cast<std::size_t>(x_max) + 3);
  double acc = law.p_zero;
  law.cdf.push_back(acc);
  for (int x = 1; x <= x_max; ++x) {
    acc += law.probs[static_cast<std::size_t>(x)];
    law.cdf.push_back(acc);
  }
  for (int x = 1; x <= x_max; ++x) {
    acc += law.probs[static_cast<std::size_t>(x)];
    law.cdf.push_back(acc);
  }
  acc += law.tail_mass_per_side;
  law.cdf.push_back(acc);
  law.cdf.push_back(1.0);  // remaining mass is the negative tail
  return law;
}

double max_feasible_tail_constant(double alpha, int x_max) {
  double per_unit = std::pow(x_max + 0.5, -alpha) / alpha;
  for (int x = x_max; x >= 1; --x)
    per_unit += std::pow(static_cast<double>(x), -(1.0 + alpha));
  return 1.0 / (2.0 * per_unit);
}

namespace {

long long tail_step(const IncrementLaw& law, double v) {
  // v uniform in (0,1); inverse CDF of the Pareto envelope on
  // [x_max + 1/2, infinity), rounded to the nearest integer.
  double y = (law.x_max + 0.5) * std::pow(v, -1.0 / law.alpha);
  if (y > 9.0e17) y = 9.0e17;  // clamp far beyond any torus size
  return std::llround(y);
}

long long step_from_uniform(const IncrementLaw& law, double u, RngStream& rng) {
  if (u < law.cdf[0]) return 0;
  auto it = std::upper_bound(law.cdf.begin(), law.cdf.end(), u);
  std::size_t cell = static_cast<std::size_t>(it - law.cdf.begin());
  std::size_t xm = static_cast<std::size_t>(law.x_max);
  if (cell <= xm) return static_cast<long long>(cell);
  if (cell <= 2 * xm) return -static_cast<long long>(cell - xm);
  long long s = tail_step(law, rng.next_double());
  return cell == 2 * xm + 1 ? s : -s;
}

}  // namespace

long long sample_increment(const IncrementLaw& law, RngStream& rng) {
  return step_from_uniform(law, rng.next_double(), rng);
}

long long sample_increment_nonzero(const IncrementLaw& law, RngStream& rng) {
  double u = law.p_zero + rng.next_double() * (1.0 - law.p_zero);
  return step_from_uniform(law, u, rng);
}

namespace {

// Mean characteristic function of W_n / n^{1/alpha} at the given frequencies
// minus the stable target, summed. Decreasing in C.
double cf_residual(double alpha, double scale, double tail_constant,
                   const CalibrationOptions& opts) {
  IncrementLaw law = build_increment_law(alpha, tail_constant, opts.x_max);
  const double norm = std::pow(static_cast<double>(opts.walk_length), 1.0 / alpha);
  std::vector<double> phi(opts.frequencies.size(), 0.0);
  RngStream root(opts.seed, 0x77a1);
  for (long long r = 0; r < opts.replicas; ++r) {
    RngStream rng = root.derive(static_cast<std::uint64_t>(r));
    long long w = 0;
    for (long long j = 0; j < opts.walk_length; ++j)
      w += sample_increment(law, rng);
    double z = static_cast<double>(w) / norm;
    for (std::size_t k = 0; k < phi.size(); ++k)
      phi[k] += std::cos(opts.frequencies[k] * z);
  }
  double res = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    double target =
        std::exp(-std::pow(scale, alpha) *
                 std::pow(std::abs(opts.frequencies[k]), alpha));
    res += phi[k] / static_cast<double>(opts.replicas) - target;
  }
  return res;
}

}  // namespace

double calibrate_tail_constant(const StableLaw& law,
                               const CalibrationOptions& opts) {
  validate(law);
  double c_lo = 0.05 * std::pow(law.scale, law.alpha);
  double c_hi = c_lo;
  double r_lo = cf_residual(law.alpha, law.scale, c_lo, opts);
  double r_hi = r_lo;
  int spent = 0;
  // Residual decreases in C: walk the bracket outward until it straddles 0.
  while (r_lo < 0.0 && spent < opts.max_expansions) {
    c_hi = c_lo;
    r_hi = r_lo;
    c_lo *= 0.5;
    r_lo = cf_residual(law.alpha, law.scale, c_lo, opts);
    ++spent;
  }
  const double c_max =
      0.999999 * max_feasible_tail_constant(law.alpha, opts.x_max);
  while (r_hi > 0.0 && c_hi < c_max && spent < opts.max_expansions) {
    double next = std::min(c_hi * 2.0, c_max);
    double r_next = cf_residual(law.alpha, law.scale, next, opts);
    c_lo = c_hi;
    r_lo = r_hi;
    c_hi = next;
    r_hi = r_next;
    ++spent;
  }
  if (!(r_lo >= 0.0 && r_hi <= 0.0))
    throw ConfigError("calibrate_tail_constant: failed to bracket, residuals [" +
                      std::to_string(r_lo) + ", " + std::to_string(r_hi) +
                      "] at C in [" + std::to_string(c_lo) + ", " +
                      std::to_string(c_hi) + "]");
  while ((c_hi - c_lo) > opts.rel_tol * c_hi) {
    double mid = 0.5 * (c_lo + c_hi);
    double r_mid = cf_residual(law.alpha, law.scale, mid, opts);
    if (r_mid >= 0.0) {
      c_lo = mid;
    } else {
      c_hi = mid;
    }
  }
  return 0.5 * (c_lo + c_hi);
}

}  // namespace stableweb::sampling
