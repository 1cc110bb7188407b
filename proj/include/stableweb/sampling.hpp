#pragma once

#include <cstdint>
#include <vector>

#include "stableweb/rng.hpp"

namespace stableweb::sampling {

// Symmetric alpha-stable law, stability index in (1,2). With scale sigma the
// characteristic function is E exp(i t X) = exp(-(sigma^alpha) |t|^alpha).
struct StableLaw {
  double alpha = 1.5;
  double scale = 1.0;
};

void validate(const StableLaw& law);

// One increment of the stable process over duration dt. Uses the exact
// trigonometric (Chambers-Mallows-Stuck) construction for the symmetric
// case, so self-similarity in dt holds by construction: the draw equals
// dt^{1/alpha} * scale * (standard symmetric stable).
double sample_stable(const StableLaw& law, double dt, RngStream& rng);

// Lattice step law with an exact power tail: p(x) = C/|x|^{1+alpha} for
// 1 <= |x| <= x_max, p(0) absorbing the normalization remainder, and a
// continuous Pareto envelope beyond x_max sampled by inverse CDF and rounded,
// keeping the support unbounded.
struct IncrementLaw {
  double alpha = 1.5;
  double tail_constant = 0.25;
  int x_max = 128;

  // probs[k] = p(k) for k = 0..x_max (one side; the law is symmetric).
  std::vector<double> probs;
  double tail_mass_per_side = 0.0;  // P(X > x_max) = C (x_max+1/2)^-alpha / alpha
  double p_zero = 0.0;

  // Sampling tables: cumulative over cells
  // [0, +1..+x_max, -1..-x_max, tail+, tail-].
  std::vector<double> cdf;

  double p(long long x) const;              // includes the analytic tail
  double prob_abs_geq(long long m) const;   // P(|X| >= m), exact table + tail
};

IncrementLaw build_increment_law(double alpha, double tail_constant, int x_max);

// Largest tail constant for which the off-zero mass stays below one.
double max_feasible_tail_constant(double alpha, int x_max);

long long sample_increment(const IncrementLaw& law, RngStream& rng);

// Step conditioned on being nonzero; the engine uses this so that self-jumps
// never enter the event stream.
long long sample_increment_nonzero(const IncrementLaw& law, RngStream& rng);

struct CalibrationOptions {
  long long walk_length = 1 << 14;  // n: steps per replica
  long long replicas = 100000;
  std::vector<double> frequencies = {0.5, 1.0, 2.0};
  int x_max = 128;
  double rel_tol = 5e-3;
  int max_expansions = 60;
  std::uint64_t seed = 0x5eedcafeULL;
};

// Finds C so that the rescaled walk W_n / n^{1/alpha} empirically matches the
// target stable law, by bisection on the summed characteristic-function
// residual at the configured frequencies (common random numbers across
// candidate C values). Throws ConfigError with the residuals if no bracket
// can be found.
double calibrate_tail_constant(const StableLaw& law,
                               const CalibrationOptions& opts = {});

}  // namespace stableweb::sampling
