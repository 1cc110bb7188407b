#include "stableweb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stableweb/errors.hpp"
#include "stableweb/operators.hpp"

namespace stableweb::diagnostics {

namespace {

const engine::Snapshot& snapshot_at(const engine::RunResult& run, double t) {
  for (const engine::Snapshot& s : run.snapshots)
    if (std::abs(s.time - t) < 1e-12) return s;
  throw ConfigError("no snapshot recorded at t=" + std::to_string(t));
}

void check_window(const engine::RunResult& run, double window) {
  double half = 0.5 * static_cast<double>(run.sites) * run.spacing;
  if (!(window > 0.0) || 8.0 * window > half * (1.0 + 1e-12))
    throw ConfigError("analysis window violates the torus guard region");
}

DensityEstimate reduce_counts(const std::vector<double>& counts, double t,
                              double window) {
  DensityEstimate est;
  est.time = t;
  est.window_half_width = window;
  est.replicas = counts.size();
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  if (counts.size() > 1) var /= static_cast<double>(counts.size() - 1);
  est.mean_count = mean;
  est.density = mean / (2.0 * window);
  est.std_error = std::sqrt(var / static_cast<double>(counts.size())) /
                  (2.0 * window);
  return est;
}

}  // namespace

DensityEstimate estimate_density(const std::vector<engine::RunResult>& runs,
                                 double t, double window) {
  if (runs.empty()) throw ConfigError("estimate_density: no runs");
  if (!(t > 0.0)) throw ConfigError("estimate_density: t must be positive");
  std::vector<double> counts;
  counts.reserve(runs.size());
  for (const engine::RunResult& run : runs) {
    check_window(run, window);
    const engine::Snapshot& snap = snapshot_at(run, t);
    if (snap.sites.empty())
      throw ConfigError("estimate_density: no live walkers at t (before births)");
    double n = 0.0;
    for (std::int64_t s : snap.sites)
      if (std::abs(engine::site_position(s, run.spacing)) <= window) n += 1.0;
    counts.push_back(n);
  }
  return reduce_counts(counts, t, window);
}

DensityEstimate estimate_age_density(const std::vector<engine::RunResult>& runs,
                                     double t, double age_lo, double age_hi,
                                     double window) {
  if (runs.empty()) throw ConfigError("estimate_age_density: no runs");
  if (age_lo < 0.0 || age_hi < age_lo)
    throw ConfigError("estimate_age_density: bad age band");
  std::vector<double> counts;
  counts.reserve(runs.size());
  for (const engine::RunResult& run : runs) {
    check_window(run, window);
    const engine::Snapshot& snap = snapshot_at(run, t);
    if (snap.sites.empty())
      throw ConfigError("estimate_age_density: no live walkers at t");
    double oldest = *std::min_element(snap.births.begin(), snap.births.end());
    if (age_lo > t - oldest)
      throw ConfigError("estimate_age_density: band exceeds attainable ages");
    double n = 0.0;
    for (std::size_t i = 0; i < snap.sites.size(); ++i) {
      double age = t - snap.births[i];
      if (age < age_lo || age >= age_hi) continue;
      if (std::abs(engine::site_position(snap.sites[i], run.spacing)) <= window)
        n += 1.0;
    }
    counts.push_back(n);
  }
  return reduce_counts(counts, t, window);
}

std::vector<LaplaceEstimate> estimate_coalescence_laplace(
    double u, double beta, const std::vector<long long>& scales,
    std::size_t replicas, double alpha, const CoalescenceOptions& opts) {
  if (!(u >= 0.0)) throw ConfigError("coalescence: separation must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("coalescence: beta must be positive");
  std::vector<LaplaceEstimate> out;
  for (long long n : scales) {
    sampling::IncrementLaw law =
        sampling::build_increment_law(alpha, opts.tail_constant, opts.x_max);
    double spacing = engine::lattice_spacing(n, alpha);
    std::int64_t sep = static_cast<std::int64_t>(
        std::floor(std::pow(static_cast<double>(n), 1.0 / alpha) * u));

    double sum = 0.0, sumsq = 0.0;
    std::size_t censored = 0;
    for (std::size_t rep = 0; rep < replicas; ++rep) {
      double val;
      if (sep == 0) {
        val = 1.0;  // T_n = 0
      } else {
        engine::SimConfig cfg;
        cfg.law = law;
        cfg.alpha = alpha;
        cfg.scale_n = n;
        cfg.sites = opts.sites;
        cfg.horizon = opts.horizon;
        cfg.seed = opts.seed;
        cfg.replica = static_cast<std::uint32_t>(rep);
        cfg.retention = engine::Retention::EventsOnly;
        cfg.stop_when_single = true;
        cfg.start = engine::ExplicitPoints{
            {{0.0, 0.0, 0},
             {0.0, static_cast<double>(sep) * spacing, 0}}};
        engine::RunResult r = engine::run_coalescing(cfg);
        if (r.events.empty()) {
          ++censored;
          val = 0.5 * std::exp(-beta * opts.horizon);  // interval midpoint
        } else {
          val = std::exp(-beta * r.events[0].time);
        }
      }
      sum += val;
      sumsq += val * val;
    }
    LaplaceEstimate est;
    est.beta = beta;
    est.scale_n = n;
    est.replicas = replicas;
    double mean = sum / static_cast<double>(replicas);
    double var = sumsq / static_cast<double>(replicas) - mean * mean;
    if (var < 0.0) var = 0.0;
    double mc = 3.0 * std::sqrt(var / static_cast<double>(replicas));
    double cens_width = 0.5 * std::exp(-beta * opts.horizon) *
                        static_cast<double>(censored) /
                        static_cast<double>(replicas);
    est.estimate = mean;
    est.half_width = mc + cens_width;
    est.censored_fraction =
        static_cast<double>(censored) / static_cast<double>(replicas);
    est.horizon_warning = cens_width > mc;
    out.push_back(est);
  }
  return out;
}

GreenEstimate estimate_green(double u, double beta, long long n,
                             std::size_t replicas, double alpha,
                             const CoalescenceOptions& opts) {
  if (!(beta > 0.0)) throw ConfigError("estimate_green: beta must be positive");
  if (n < (1 << 8)) throw ConfigError("estimate_green: n must be at least 2^8");
  sampling::IncrementLaw law =
      sampling::build_increment_law(alpha, opts.tail_constant, opts.x_max);
  std::int64_t target = std::llround(std::pow(static_cast<double>(n), 1.0 / alpha) * u);
  // discount horizon: weights below 1e-6 are dropped
  long long steps = static_cast<long long>(
      std::ceil(static_cast<double>(n) * 13.8 / beta));
  double scale = std::pow(static_cast<double>(n), 1.0 / alpha - 1.0);

  double sum = 0.0, sumsq = 0.0;
  RngStream root(opts.seed, 0x6ee1);
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    RngStream rng = root.derive(rep);
    long long w = 0;
    double acc = 0.0;
    for (long long j = 1; j <= steps; ++j) {
      w += sampling::sample_increment(law, rng);
      if (w == target)
        acc += std::exp(-beta * static_cast<double>(j) / static_cast<double>(n));
    }
    acc *= scale;
    sum += acc;
    sumsq += acc * acc;
  }
  GreenEstimate est;
  double mean = sum / static_cast<double>(replicas);
  double var = sumsq / static_cast<double>(replicas) - mean * mean;
  if (var < 0.0) var = 0.0;
  est.value = mean;
  est.std_error = std::sqrt(var / static_cast<double>(replicas));
  if (!std::isfinite(est.std_error)) est.std_error = std::abs(mean) + 1.0;
  return est;
}

// ---------------------------------------------------------------------------
// Compactness
// ---------------------------------------------------------------------------

namespace {

// Pi_N with the pre-clamp extent witness kept for condition (iii).
std::vector<ProjectedPath> project_witnessed(const PathCollection& c, int n) {
  PathCollection filtered = operators::filter_age(c, std::ldexp(1.0, -n));
  std::vector<ProjectedPath> out;
  for (const AgedPath& p : filtered.paths) {
    operators::RestrictedAgedPath r =
        operators::restrict_path(p, operators::square(n));
    if (r.empty) continue;
    out.push_back({r.path, r.unclamped_abs_max});
  }
  return out;
}

std::string describe(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

double max_age(const AgedPath& p) { return p.age_at(p.horizon); }

}  // namespace

const std::vector<ProjectedPath>& ProjectionBundle::at(int n) const {
  if (n < n_lo || n >= n_lo + static_cast<int>(levels.size()))
    throw StateError("ProjectionBundle: level " + std::to_string(n) +
                     " not present");
  return levels[static_cast<std::size_t>(n - n_lo)];
}

ProjectionBundle project_bundle(const PathCollection& collection, int n_lo,
                                int n_hi) {
  if (n_lo < 1 || n_hi < n_lo)
    throw ConfigError("project_bundle: bad level range");
  ProjectionBundle b;
  b.n_lo = n_lo;
  for (int n = n_lo; n <= n_hi; ++n)
    b.levels.push_back(project_witnessed(collection, n));
  return b;
}

CompactnessReport check_compactness(const PathCollection& collection,
                                    const CompactnessProfile& profile,
                                    int n_lo, int n_hi,
                                    const metrics::MetricOptions& mopts) {
  (void)mopts;
  if (n_lo < 1 || n_hi < n_lo)
    throw ConfigError("check_compactness: bad level range");
  return check_compactness(project_bundle(collection, n_lo, n_hi + 1), profile,
                           n_lo, n_hi);
}

CompactnessReport check_compactness(const ProjectionBundle& bundle,
                                    const CompactnessProfile& profile,
                                    int n_lo, int n_hi) {
  if (n_lo < 1 || n_hi < n_lo)
    throw ConfigError("check_compactness: bad level range");
  if (static_cast<int>(profile.levels.size()) < n_hi)
    throw ConfigError("check_compactness: profile does not cover the range");

  CompactnessReport report;
  auto fail = [&](int n, const char* cond, const std::string& witness) {
    report.conditions.push_back({n, cond, false, witness});
    report.pass = false;
  };
  auto ok = [&](int n, const char* cond) {
    report.conditions.push_back({n, cond, true, ""});
  };

  for (int n = n_lo; n <= n_hi; ++n) {
    const ProfileLevel& lvl = profile.levels[static_cast<std::size_t>(n - 1)];
    const double eps = lvl.eps;
    const double two_mn = std::ldexp(1.0, -n);
    const std::vector<ProjectedPath>& pn = bundle.at(n);
    const std::vector<ProjectedPath>& pn1 = bundle.at(n + 1);

    // (i) path count
    if (static_cast<double>(pn.size()) < lvl.cap)
      ok(n, "i");
    else
      fail(n, "i", "count " + std::to_string(pn.size()));

    // (ii) ages bounded
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& p : pn)
        if (!(max_age(p.path) < lvl.cap)) {
          pass = false;
          w = "age " + describe(max_age(p.path));
          break;
        }
      pass ? ok(n, "ii") : fail(n, "ii", w);
    }

    // (iii) spatial extent before clamping
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& p : pn)
        if (!(p.unclamped_abs_max <= lvl.cap)) {
          pass = false;
          w = "extent " + describe(p.unclamped_abs_max);
          break;
        }
      pass ? ok(n, "iii") : fail(n, "iii", w);
    }

    // (iv) modulus bounds on [T_N, N]; the one-pass grid bound settles most
    // paths, the exact partition search runs only near the threshold
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& p : pn) {
        double lo = p.path.birth, hi = p.path.horizon;
        for (std::size_t r = 1; r <= lvl.delta_mod.size() && pass; ++r) {
          double delta = std::ldexp(1.0, -static_cast<int>(r));
          if (delta > hi - lo) continue;  // window shorter than the mesh
          if (metrics::modulus_grid_bound(p.path, delta, lo, hi) <=
              lvl.delta_mod[r - 1])
            continue;
          double wmod = metrics::modulus(p.path, delta, lo, hi);
          if (!(wmod <= lvl.delta_mod[r - 1])) {
            pass = false;
            w = "omega(2^-" + std::to_string(r) + ") = " + describe(wmod);
          }
        }
        if (!pass) break;
      }
      pass ? ok(n, "iv") : fail(n, "iv", w);
    }

    // (v) clean entry into the square
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& q : pn1) {
        operators::RestrictedAgedPath rn =
            operators::restrict_path(q.path, operators::square(n));
        if (rn.empty) continue;
        double tn = rn.path.birth;
        double v = q.path.value_at(tn);
        if (!(v >= -n + eps && v <= n - eps)) {
          pass = false;
          w = "entry value " + describe(v);
          break;
        }
        double lo = std::max(q.path.birth, static_cast<double>(-n));
        bool dirty = false;
        auto in_band = [&](double x) {
          return x >= -n - eps && x <= n + eps;
        };
        if (lo < tn && in_band(q.path.value_at(lo))) dirty = true;
        for (const Jump& j : q.path.jumps) {
          if (j.time <= lo || j.time >= tn) continue;
          if (in_band(j.value)) dirty = true;
        }
        if (dirty) {
          pass = false;
          w = "pre-entry value inside the widened square";
          break;
        }
      }
      pass ? ok(n, "v") : fail(n, "v", w);
    }

    // (vi) no age jump with age near 2^-N
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& q : pn1) {
        double prev_origin = q.path.age_origin;
        for (const AgeJump& j : q.path.age_jumps) {
          double pre = j.time - prev_origin;
          double post = j.time - j.origin;
          if (std::abs(pre - two_mn) <= eps || std::abs(post - two_mn) <= eps) {
            pass = false;
            w = "age jump " + describe(pre) + " -> " + describe(post);
            break;
          }
          prev_origin = j.origin;
        }
        if (!pass) break;
      }
      pass ? ok(n, "vi") : fail(n, "vi", w);
    }

    // (vii) age jumps separated in time
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& p : pn) {
        for (std::size_t k = 1; k < p.path.age_jumps.size(); ++k) {
          double gap = p.path.age_jumps[k].time - p.path.age_jumps[k - 1].time;
          if (gap < eps) {
            pass = false;
            w = "age jump gap " + describe(gap);
            break;
          }
        }
        if (!pass) break;
      }
      pass ? ok(n, "vii") : fail(n, "vii", w);
    }

    // (viii) age away from 2^-N near the square's time faces
    {
      bool pass = true;
      std::string w;
      for (const ProjectedPath& q : pn1) {
        double prev_t = q.path.birth;
        double prev_origin = q.path.age_origin;
        auto check_segment = [&](double t0, double t1, double origin) {
          for (double face : {static_cast<double>(-n), static_cast<double>(n)}) {
            double lo = std::max(t0, face - eps);
            double hi = std::min(t1, face + eps);
            if (lo > hi) continue;
            double a_lo = lo - origin, a_hi = hi - origin;
            if (a_hi > two_mn - eps && a_lo < two_mn + eps) return false;
          }
          return true;
        };
        for (const AgeJump& j : q.path.age_jumps) {
          if (!check_segment(prev_t, j.time, prev_origin)) {
            pass = false;
            break;
          }
          prev_t = j.time;
          prev_origin = j.origin;
        }
        if (pass && !check_segment(prev_t, q.path.horizon, prev_origin))
          pass = false;
        if (!pass) {
          w = "age in the banned band near a time face";
          break;
        }
      }
      pass ? ok(n, "viii") : fail(n, "viii", w);
    }

    // (ix) restriction stability under small window shifts; the tabulated
    // sequence repeats values after the monotone fill, so each distinct
    // shift is evaluated once against its strictest 2^-r bound.
    {
      bool pass = true;
      std::string w;
      std::vector<std::pair<double, double>> shifts;  // (dm, min bound)
      for (std::size_t r = 1; r <= lvl.delta_mod.size(); ++r) {
        double dm = lvl.delta_mod[r - 1];
        if (!(dm >= 0.0 && dm < eps / 2.0)) continue;
        double bound = std::ldexp(1.0, -static_cast<int>(r));
        bool merged = false;
        for (auto& sh : shifts)
          if (sh.first == dm) {
            sh.second = std::min(sh.second, bound);
            merged = true;
          }
        if (!merged) shifts.push_back({dm, bound});
      }
      for (const ProjectedPath& q : pn1) {
        operators::RestrictedAgedPath rn =
            operators::restrict_path(q.path, operators::square(n));
        if (rn.empty) continue;
        double tn = rn.path.birth;
        double hi = std::min(static_cast<double>(n), q.path.horizon);
        for (const auto& [dm, bound] : shifts) {
          for (double e1 : {0.0, dm}) {
            for (double e2 : {0.0, dm}) {
              if (e1 == 0.0 && e2 == 0.0) continue;
              if (tn + e1 >= hi + e2 || hi + e2 > q.path.horizon) continue;
              double d = metrics::metric_d_window_shift(q.path, tn, hi, e1, e2);
              if (!(d <= bound)) {
                pass = false;
                w = "window shift d = " + describe(d) + " over bound " +
                    describe(bound);
                break;
              }
            }
            if (!pass) break;
          }
          if (!pass) break;
        }
        if (!pass) break;
      }
      pass ? ok(n, "ix") : fail(n, "ix", w);
    }
  }
  return report;
}

CompactnessProfile fit_profile_stream(std::size_t count,
                                      const BundleSource& source, int n_lo,
                                      int n_hi, const FitOptions& fopts) {
  if (count == 0) throw ConfigError("fit_profile: no training data");
  CompactnessProfile prof;
  prof.levels.resize(static_cast<std::size_t>(n_hi));

  struct Acc {
    double cap = 1.0;
    double margin = 0.0;
    std::vector<double> mods;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(n_hi));
  for (int n = 1; n <= n_hi; ++n) {
    acc[static_cast<std::size_t>(n - 1)].mods.assign(
        static_cast<std::size_t>(fopts.r_max), 0.0);
    acc[static_cast<std::size_t>(n - 1)].margin =
        0.45 * std::ldexp(1.0, -n);  // cap keeps the (vi)/(viii) bands short
  }

  for (std::size_t rep = 0; rep < count; ++rep) {
    ProjectionBundle bundle = source(rep);
    for (int n = 1; n <= n_hi; ++n) {
      Acc& a = acc[static_cast<std::size_t>(n - 1)];
      const double two_mn = std::ldexp(1.0, -n);
      const std::vector<ProjectedPath>& pn = bundle.at(n);
      const std::vector<ProjectedPath>& pn1 = bundle.at(n + 1);
      a.cap = std::max(a.cap, static_cast<double>(pn.size()));
      for (const ProjectedPath& p : pn) {
        a.cap = std::max(a.cap, max_age(p.path));
        a.cap = std::max(a.cap, p.unclamped_abs_max);
        for (std::size_t k = 1; k < p.path.age_jumps.size(); ++k)
          a.margin = std::min(a.margin, p.path.age_jumps[k].time -
                                            p.path.age_jumps[k - 1].time);
      }
      // Exact moduli are needed only for paths whose cheap grid bound can
      // still raise the running maximum; visiting in descending bound order
      // keeps the exact partition search to a handful of paths per depth.
      for (int r = 1; r <= fopts.r_max; ++r) {
        double delta = std::ldexp(1.0, -r);
        double& slot = a.mods[static_cast<std::size_t>(r - 1)];
        std::vector<std::pair<double, const ProjectedPath*>> order;
        for (const ProjectedPath& p : pn) {
          if (delta > p.path.horizon - p.path.birth) continue;
          double b = metrics::modulus_grid_bound(p.path, delta, p.path.birth,
                                                 p.path.horizon);
          if (b > slot) order.push_back({b, &p});
        }
        std::sort(order.begin(), order.end(),
                  [](const auto& x, const auto& y) { return x.first > y.first; });
        for (const auto& [bound, pp] : order) {
          if (bound <= slot) break;
          slot = std::max(slot, metrics::modulus(pp->path, delta,
                                                 pp->path.birth,
                                                 pp->path.horizon));
        }
      }
      for (const ProjectedPath& q : pn1) {
        operators::RestrictedAgedPath rn =
            operators::restrict_path(q.path, operators::square(n));
        if (!rn.empty) {
          double tn = rn.path.birth;
          a.margin = std::min(a.margin,
                              static_cast<double>(n) -
                                  std::abs(q.path.value_at(tn)));
          double lo = std::max(q.path.birth, static_cast<double>(-n));
          if (lo < tn)
            a.margin = std::min(a.margin, std::abs(q.path.value_at(lo)) -
                                              static_cast<double>(n));
          for (const Jump& j : q.path.jumps)
            if (j.time > lo && j.time < tn)
              a.margin = std::min(a.margin,
                                  std::abs(j.value) - static_cast<double>(n));
        }
        double prev_origin = q.path.age_origin;
        for (const AgeJump& j : q.path.age_jumps) {
          a.margin =
              std::min(a.margin, std::abs(j.time - prev_origin - two_mn));
          a.margin = std::min(a.margin, std::abs(j.time - j.origin - two_mn));
          prev_origin = j.origin;
        }
        prev_origin = q.path.age_origin;
        double prev_t = q.path.birth;
        auto seg_margin = [&](double t0, double t1, double origin) {
          for (double face :
               {static_cast<double>(-n), static_cast<double>(n)}) {
            double d_time;
            if (t1 < face)
              d_time = face - t1;
            else if (t0 > face)
              d_time = t0 - face;
            else
              d_time = 0.0;
            double a0 = t0 - origin, a1 = t1 - origin;
            double d_age;
            if (a1 < two_mn)
              d_age = two_mn - a1;
            else if (a0 > two_mn)
              d_age = a0 - two_mn;
            else
              d_age = 0.0;
            a.margin = std::min(a.margin, std::max(d_time, d_age) / 2.0);
          }
        };
        for (const AgeJump& j : q.path.age_jumps) {
          seg_margin(prev_t, j.time, prev_origin);
          prev_t = j.time;
          prev_origin = j.origin;
        }
        seg_margin(prev_t, q.path.horizon, prev_origin);
      }
    }
  }

  for (int n = 1; n <= n_hi; ++n) {
    ProfileLevel& lvl = prof.levels[static_cast<std::size_t>(n - 1)];
    const Acc& a = acc[static_cast<std::size_t>(n - 1)];
    lvl.cap = a.cap * fopts.cap_margin + 1.0;
    lvl.eps = std::max(1e-9, a.margin * fopts.eps_shrink);
    lvl.delta_mod.resize(static_cast<std::size_t>(fopts.r_max));
    for (int r = 1; r <= fopts.r_max; ++r)
      lvl.delta_mod[static_cast<std::size_t>(r - 1)] =
          a.mods[static_cast<std::size_t>(r - 1)] * fopts.mod_margin + 1e-9;
    for (int r = fopts.r_max - 1; r >= 1; --r)
      lvl.delta_mod[static_cast<std::size_t>(r - 1)] =
          std::max(lvl.delta_mod[static_cast<std::size_t>(r - 1)],
                   lvl.delta_mod[static_cast<std::size_t>(r)]);
  }

  // Second pass: deactivate (ix) depths the training set cannot support
  // (raising delta_N(r) to eps/2 removes r from the active set).
  std::vector<std::vector<bool>> unsupported(
      static_cast<std::size_t>(n_hi),
      std::vector<bool>(static_cast<std::size_t>(fopts.r_max), false));
  bool any_active = false;
  for (int n = n_lo; n <= n_hi; ++n)
    for (int r = 1; r <= fopts.r_max; ++r)
      if (prof.levels[static_cast<std::size_t>(n - 1)]
              .delta_mod[static_cast<std::size_t>(r - 1)] <
          prof.levels[static_cast<std::size_t>(n - 1)].eps / 2.0)
        any_active = true;
  if (any_active) {
    for (std::size_t rep = 0; rep < count; ++rep) {
      ProjectionBundle bundle = source(rep);
      for (int n = n_lo; n <= n_hi; ++n) {
        ProfileLevel& lvl = prof.levels[static_cast<std::size_t>(n - 1)];
        // distinct shift values with the set of depths sharing each
        std::vector<std::pair<double, std::vector<int>>> shifts;
        for (int r = 1; r <= fopts.r_max; ++r) {
          if (unsupported[static_cast<std::size_t>(n - 1)]
                         [static_cast<std::size_t>(r - 1)])
            continue;
          double dm = lvl.delta_mod[static_cast<std::size_t>(r - 1)];
          if (!(dm < lvl.eps / 2.0)) continue;
          bool merged = false;
          for (auto& sh : shifts)
            if (sh.first == dm) {
              sh.second.push_back(r);
              merged = true;
            }
          if (!merged) shifts.push_back({dm, {r}});
        }
        for (const auto& [dm, rs] : shifts) {
          double worst = 0.0;
          for (const ProjectedPath& q : bundle.at(n + 1)) {
            operators::RestrictedAgedPath rn =
                operators::restrict_path(q.path, operators::square(n));
            if (rn.empty) continue;
            double tn = rn.path.birth;
            double hi = std::min(static_cast<double>(n), q.path.horizon);
            for (double e1 : {0.0, dm}) {
              for (double e2 : {0.0, dm}) {
                if (e1 == 0.0 && e2 == 0.0) continue;
                if (tn + e1 >= hi + e2 || hi + e2 > q.path.horizon) continue;
                worst = std::max(worst, metrics::metric_d_window_shift(
                                            q.path, tn, hi, e1, e2));
              }
            }
          }
          for (int r : rs)
            if (worst > std::ldexp(1.0, -r))
              unsupported[static_cast<std::size_t>(n - 1)]
                         [static_cast<std::size_t>(r - 1)] = true;
        }
      }
    }
    for (int n = n_lo; n <= n_hi; ++n) {
      ProfileLevel& lvl = prof.levels[static_cast<std::size_t>(n - 1)];
      for (int r = 1; r <= fopts.r_max; ++r)
        if (unsupported[static_cast<std::size_t>(n - 1)]
                       [static_cast<std::size_t>(r - 1)])
          lvl.delta_mod[static_cast<std::size_t>(r - 1)] = lvl.eps / 2.0;
      for (int r = fopts.r_max - 1; r >= 1; --r)
        lvl.delta_mod[static_cast<std::size_t>(r - 1)] =
            std::max(lvl.delta_mod[static_cast<std::size_t>(r - 1)],
                     lvl.delta_mod[static_cast<std::size_t>(r)]);
    }
  }
  return prof;
}

CompactnessProfile fit_profile(const std::vector<PathCollection>& training,
                               int n_lo, int n_hi, const FitOptions& fopts,
                               const metrics::MetricOptions& mopts) {
  (void)mopts;
  std::vector<ProjectionBundle> bundles;
  bundles.reserve(training.size());
  for (const PathCollection& c : training)
    bundles.push_back(project_bundle(c, 1, n_hi + 1));
  return fit_profile_stream(
      bundles.size(),
      [&](std::size_t i) -> ProjectionBundle { return bundles[i]; }, n_lo,
      n_hi, fopts);
}

std::vector<double> skeleton_gap(engine::RunResult& full,
                                 std::vector<engine::RunResult>& thetas, int n,
                                 const metrics::MetricOptions& mopts) {
  engine::compute_ages(full);
  PathCollection pf = operators::project(full.paths, n);
  std::vector<double> gaps;
  for (engine::RunResult& th : thetas) {
    if (th.replica != full.replica || th.spacing != full.spacing ||
        th.horizon != full.horizon)
      throw ConfigError("skeleton_gap: runs are not coupled");
    engine::compute_ages(th);
    PathCollection pt = operators::project(th.paths, n);
    gaps.push_back(metrics::hausdorff(pf, pt, mopts));
  }
  return gaps;
}

}  // namespace stableweb::diagnostics
