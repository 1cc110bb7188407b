#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stableweb/engine.hpp"
#include "stableweb/metrics.hpp"

namespace stableweb::diagnostics {

struct DensityEstimate {
  double time = 0.0;
  double window_half_width = 0.0;
  double mean_count = 0.0;
  double density = 0.0;    // mean count / (2 * window)
  double std_error = 0.0;  // of the density, over replicas
  std::size_t replicas = 0;
};

// Live-walker density in [-window, window] at a sampled time, averaged over
// replica runs. The window must stay within the torus guard region.
DensityEstimate estimate_density(const std::vector<engine::RunResult>& runs,
                                 double t, double window);

// Density of walkers whose age falls in [age_lo, age_hi) at a sampled time.
// Ages are exact: a live walker's age is t minus its birth time.
DensityEstimate estimate_age_density(const std::vector<engine::RunResult>& runs,
                                     double t, double age_lo, double age_hi,
                                     double window);

struct LaplaceEstimate {
  double beta = 0.0;
  long long scale_n = 0;
  std::size_t replicas = 0;
  double estimate = 0.0;    // midpoint of the censoring interval
  double half_width = 0.0;  // 3 sigma Monte Carlo plus censoring width
  double censored_fraction = 0.0;
  bool horizon_warning = false;
};

struct CoalescenceOptions {
  double horizon = 8.0;
  std::int64_t sites = 1 << 17;
  std::uint64_t seed = 2024;
  int x_max = 128;
  double tail_constant = 0.25;
};

// E exp(-beta T_n) for two walkers launched at 0 and floor(n^{1/alpha} u)
// lattice units apart. Runs that never meet by the horizon contribute the
// interval [0, exp(-beta horizon)] and widen the band.
std::vector<LaplaceEstimate> estimate_coalescence_laplace(
    double u, double beta, const std::vector<long long>& scales,
    std::size_t replicas, double alpha, const CoalescenceOptions& opts = {});

struct GreenEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of the discounted occupation sum
// n^{1/alpha - 1} sum_j 1{W_j = [u n^{1/alpha}]} e^{-beta j / n}.
GreenEstimate estimate_green(double u, double beta, long long n,
                             std::size_t replicas, double alpha,
                             const CoalescenceOptions& opts = {});

// ---------------------------------------------------------------------------
// Compactness profile K(theta)
// ---------------------------------------------------------------------------

struct ProfileLevel {
  double eps = 0.0;                // epsilon_N
  double cap = 0.0;                // M_N
  std::vector<double> delta_mod;   // delta_N(r), r = 1..size, nonincreasing
};

struct CompactnessProfile {
  std::vector<ProfileLevel> levels;  // levels[N-1]
};

struct ConditionResult {
  int level = 0;           // N
  std::string condition;   // "i" .. "ix"
  bool pass = true;
  std::string witness;     // filled on failure
};

struct CompactnessReport {
  bool pass = true;
  std::vector<ConditionResult> conditions;
};

// Pi_N with the pre-clamp spatial extent kept as the witness for (iii).
struct ProjectedPath {
  AgedPath path;
  double unclamped_abs_max = 0.0;
};

// Projections Pi_{n_lo} .. Pi_{n_hi} of one collection; the compactness
// conditions on level N read Pi_N and Pi_{N+1}.
struct ProjectionBundle {
  int n_lo = 1;
  std::vector<std::vector<ProjectedPath>> levels;
  const std::vector<ProjectedPath>& at(int n) const;
};

ProjectionBundle project_bundle(const PathCollection& collection, int n_lo,
                                int n_hi);

// Evaluates conditions (i)-(ix) of K(theta) on Pi_N(collection) for each
// N in [n_lo, n_hi], with witnesses for every failure. The profile must
// cover the range and the bundle must cover [n_lo, n_hi + 1].
CompactnessReport check_compactness(const ProjectionBundle& bundle,
                                    const CompactnessProfile& profile,
                                    int n_lo, int n_hi);
CompactnessReport check_compactness(const PathCollection& collection,
                                    const CompactnessProfile& profile,
                                    int n_lo, int n_hi,
                                    const metrics::MetricOptions& mopts = {});

struct FitOptions {
  // Observed maxima over ~100 replicas sit near the 99th percentile.
  // Extents and moduli inherit the walk's alpha = 3/2 tail, so the 99.9%
  // quantile extrapolates to about 10^{2/3} = 4.6 times the observed
  // maximum; 6x leaves headroom. Epsilon shrinks toward the lenient side.
  double cap_margin = 6.0;   // multiplier on observed maxima for M_N
  double mod_margin = 6.0;   // multiplier on observed moduli for delta_N
  double eps_shrink = 0.25;  // fraction of the observed margin used for eps_N
  int r_max = 12;            // tabulated modulus depths
};

// Fits a profile from training collections: M_N and delta_N from upper
// quantiles (maxima at desk scale, widened), eps_N from the smallest
// observed margins, and (ix) deactivated at depths where the training set
// cannot meet the 2^-r bound. The streaming form regenerates bundles on
// demand, so a large training set never lives in memory at once.
using BundleSource = std::function<ProjectionBundle(std::size_t index)>;
CompactnessProfile fit_profile_stream(std::size_t count,
                                      const BundleSource& source, int n_lo,
                                      int n_hi, const FitOptions& fopts = {});
CompactnessProfile fit_profile(const std::vector<PathCollection>& training,
                               int n_lo, int n_hi, const FitOptions& fopts = {},
                               const metrics::MetricOptions& mopts = {});

// Coupled Hausdorff gap between Pi_N of the reference system and Pi_N of
// each theta system. All runs must come from the same replica and lattice.
std::vector<double> skeleton_gap(engine::RunResult& full,
                                 std::vector<engine::RunResult>& thetas, int n,
                                 const metrics::MetricOptions& mopts = {});

}  // namespace stableweb::diagnostics
