#pragma once

#include <string>
#include <vector>

#include "stableweb/config.hpp"
#include "stableweb/diagnostics.hpp"

namespace stableweb::experiments {

// Builds the increment law from the config, calibrating the tail constant
// when requested.
sampling::IncrementLaw law_for(const config::RunConfig& cfg);

// Runs replica simulations 0..replicas-1 with per-replica substreams.
// Replicas may run on worker threads; results always come back ordered by
// replica id, so aggregation is bit-reproducible regardless of thread count.
std::vector<engine::RunResult> run_replicas(const config::RunConfig& cfg,
                                            const sampling::IncrementLaw& law,
                                            int threads = 1);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of log density against log t.
SlopeFit fit_loglog(const std::vector<double>& ts,
                    const std::vector<double>& densities);

struct DensityTable {
  std::vector<diagnostics::DensityEstimate> rows;
  SlopeFit fit;
};

DensityTable density_experiment(const std::vector<engine::RunResult>& runs,
                                const std::vector<double>& times,
                                double window);

struct AgeBandRow {
  double lo = 0.0, hi = 0.0;
  diagnostics::DensityEstimate estimate;
};

struct AgeBandTable {
  std::vector<AgeBandRow> rows;
  // ratio of adjacent band counts and its analytic value k-free target
  std::vector<double> ratios;
  std::vector<double> analytic;
};

// Bands [edges[i], edges[i+1]) at the measurement time; analytic ratios use
// the density law edge^-1/alpha differences so the constant k cancels.
AgeBandTable age_band_experiment(const std::vector<engine::RunResult>& runs,
                                 double t, const std::vector<double>& edges,
                                 double window, double alpha);

double median(std::vector<double> xs);
double quantile(std::vector<double> xs, double q);

}  // namespace stableweb::experiments
