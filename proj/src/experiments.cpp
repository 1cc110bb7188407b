#include "stableweb/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "stableweb/errors.hpp"

namespace stableweb::experiments {

sampling::IncrementLaw law_for(const config::RunConfig& cfg) {
  double c = cfg.tail_constant;
  if (cfg.calibrate) {
    sampling::CalibrationOptions opts;
    opts.x_max = cfg.x_max;
    opts.seed = cfg.seed ^ 0xca11b7a7e5eedull;
    c = sampling::calibrate_tail_constant({cfg.alpha, cfg.stable_scale}, opts);
  }
  return sampling::build_increment_law(cfg.alpha, c, cfg.x_max);
}

std::vector<engine::RunResult> run_replicas(const config::RunConfig& cfg,
                                            const sampling::IncrementLaw& law,
                                            int threads) {
  const std::size_t n = static_cast<std::size_t>(cfg.replicas);
  std::vector<engine::RunResult> out(n);
  if (threads < 2 || n < 2) {
    for (std::size_t r = 0; r < n; ++r)
      out[r] = engine::run_coalescing(
          config::to_sim_config(cfg, law, static_cast<std::uint32_t>(r)));
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t r = next.fetch_add(1);
      if (r >= n) return;
      try {
        out[r] = engine::run_coalescing(
            config::to_sim_config(cfg, law, static_cast<std::uint32_t>(r)));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int k = std::min<int>(threads, static_cast<int>(n));
  for (int i = 0; i < k; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

SlopeFit fit_loglog(const std::vector<double>& ts,
                    const std::vector<double>& densities) {
  if (ts.size() != densities.size() || ts.size() < 2)
    throw ConfigError("fit_loglog: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double x = std::log(ts[i]);
    double y = std::log(densities[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = static_cast<double>(ts.size());
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

DensityTable density_experiment(const std::vector<engine::RunResult>& runs,
                                const std::vector<double>& times,
                                double window) {
  DensityTable table;
  std::vector<double> ds;
  for (double t : times) {
    table.rows.push_back(diagnostics::estimate_density(runs, t, window));
    ds.push_back(table.rows.back().density);
  }
  table.fit = fit_loglog(times, ds);
  return table;
}

AgeBandTable age_band_experiment(const std::vector<engine::RunResult>& runs,
                                 double t, const std::vector<double>& edges,
                                 double window, double alpha) {
  if (edges.size() < 2) throw ConfigError("age bands need at least two edges");
  AgeBandTable table;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    AgeBandRow row;
    row.lo = edges[i];
    row.hi = edges[i + 1];
    row.estimate =
        diagnostics::estimate_age_density(runs, t, row.lo, row.hi, window);
    table.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
    const AgeBandRow& a = table.rows[i];
    const AgeBandRow& b = table.rows[i + 1];
    table.ratios.push_back(b.estimate.mean_count > 0.0
                               ? a.estimate.mean_count / b.estimate.mean_count
                               : 0.0);
    auto f = [&](double x) { return std::pow(x, -1.0 / alpha); };
    table.analytic.push_back((f(a.lo) - f(a.hi)) / (f(b.lo) - f(b.hi)));
  }
  return table;
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace stableweb::experiments
