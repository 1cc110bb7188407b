#include "stableweb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "stableweb/errors.hpp"
#include "stableweb/operators.hpp"

namespace stableweb::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Exact delta-modulus.
//
// Breakpoints of an optimal partition for a step function sit either strictly
// between jumps or exactly on a jump (which drops the pre-jump value from the
// cell). Starts are tracked as t + k*eps with an infinitesimal eps so the
// strict constraint "breakpoint after the previous cell's last jump" stays
// exact.
// ---------------------------------------------------------------------------

struct LexTime {
  double v = kInf;
  int eps = 0;
};

bool lex_less(const LexTime& a, const LexTime& b) {
  return a.v < b.v || (a.v == b.v && a.eps < b.eps);
}

// s + delta <= (t, 0)
bool fits_before(const LexTime& s, double delta, double t) {
  double sv = s.v + delta;
  return sv < t || (sv == t && s.eps == 0);
}

// Preallocated ring buffers shared across the feasibility bisection.
struct MeshScratch {
  std::vector<LexTime> pre, at;
  std::vector<int> maxq, minq;                 // oscillation window deques
  std::vector<std::pair<int, LexTime>> preq, atq;  // state minima deques
};

// Sliding minimum over LexTime states keyed by index, on a borrowed buffer.
struct MinDeque {
  std::vector<std::pair<int, LexTime>>& q;
  std::size_t head = 0;
  explicit MinDeque(std::vector<std::pair<int, LexTime>>& buf) : q(buf) {
    q.clear();
  }
  void push(int k, const LexTime& v) {
    if (v.v == kInf) return;
    while (q.size() > head && !lex_less(q.back().second, v)) q.pop_back();
    q.push_back({k, v});
  }
  void trim(int lo) {
    while (q.size() > head && q[head].first < lo) ++head;
  }
  LexTime min() const { return q.size() > head ? q[head].second : LexTime{}; }
};

// Sliding-window oscillation over V[l..r]: leftmost l with osc <= lambda.
struct OscWindow {
  const std::vector<double>& v;
  std::vector<int>& maxq;
  std::vector<int>& minq;
  std::size_t maxh = 0, minh = 0;
  int left = 0, right = -1;  // window [left, right]
  OscWindow(const std::vector<double>& vals, std::vector<int>& maxbuf,
            std::vector<int>& minbuf)
      : v(vals), maxq(maxbuf), minq(minbuf) {
    maxq.clear();
    minq.clear();
  }
  void extend_to(int r, double lambda) {
    while (right < r) {
      ++right;
      while (maxq.size() > maxh && v[maxq.back()] <= v[right]) maxq.pop_back();
      maxq.push_back(right);
      while (minq.size() > minh && v[minq.back()] >= v[right]) minq.pop_back();
      minq.push_back(right);
    }
    while (left <= right && osc() > lambda) {
      if (maxq[maxh] == left) ++maxh;
      if (minq[minh] == left) ++minh;
      ++left;
    }
  }
  double osc() const {
    if (maxq.size() <= maxh) return 0.0;
    return v[maxq[maxh]] - v[minq[minh]];
  }
};

// Is there a mesh->delta partition of [lo,hi] with every cell oscillation
// <= lambda? q: jump times in (lo, hi]; vals[m]: value on [q_{m-1}, q_m).
bool mesh_feasible(const std::vector<double>& q, const std::vector<double>& vals,
                   double lo, double hi, double delta, double lambda,
                   MeshScratch& scratch) {
  if (lambda < 0.0) return false;
  const int J = static_cast<int>(q.size());
  if (J == 0) return true;

  std::vector<LexTime>& pre = scratch.pre;
  std::vector<LexTime>& at = scratch.at;
  pre.assign(static_cast<std::size_t>(J), LexTime{});
  at.assign(static_cast<std::size_t>(J), LexTime{});
  if (lo < q[0]) pre[0] = LexTime{lo, 0};
  if (q[0] - lo >= delta || lo == q[0]) at[0] = LexTime{q[0], 0};

  OscWindow win(vals, scratch.maxq, scratch.minq);
  MinDeque pre_min(scratch.preq), at_min(scratch.atq);

  auto source_min = [&](int j, double lam) {
    // valid sources for a cell starting before jump j: pre[k] with
    // osc(V[k..j]) <= lam, at[k] with osc(V[k+1..j]) <= lam, k <= j-1
    win.extend_to(j, lam);
    int col = win.left;  // minimal m with osc(V[m..j]) <= lam
    pre_min.push(j - 1, pre[j - 1]);
    at_min.push(j - 1, at[j - 1]);
    pre_min.trim(col);
    at_min.trim(col - 1);
    LexTime m = pre_min.min();
    LexTime a = at_min.min();
    return lex_less(a, m) ? a : m;
  };

  for (int j = 1; j < J; ++j) {
    LexTime src = source_min(j, lambda);
    if (src.v < kInf) {
      if (fits_before(src, delta, q[j])) at[j] = LexTime{q[j], 0};
      LexTime t{src.v + delta, src.eps};
      LexTime bound{q[j - 1], 1};
      if (lex_less(t, bound)) t = bound;
      if (t.v < q[j]) pre[j] = t;
    }
  }
  LexTime fin = source_min(J, lambda);
  return fin.v < kInf && fits_before(fin, delta, hi);
}

}  // namespace

double modulus(const AgedPath& p, double delta, double lo, double hi) {
  if (!(delta > 0.0)) throw ConfigError("modulus: delta must be positive");
  if (lo < p.birth || hi > p.horizon || !(lo < hi))
    throw ConfigError("modulus: window outside the path domain");
  if (delta > hi - lo)
    throw ConfigError("modulus: delta exceeds the window length");

  std::vector<double> q, vals;
  vals.push_back(p.value_at(lo));
  for (const Jump& j : p.jumps) {
    if (j.time <= lo) continue;
    if (j.time > hi) break;
    if (j.value == vals.back()) continue;
    q.push_back(j.time);
    vals.push_back(j.value);
  }
  if (q.empty()) return 0.0;

  double osc_all = *std::max_element(vals.begin(), vals.end()) -
                   *std::min_element(vals.begin(), vals.end());
  // Bisect to adjacent doubles: the result is the smallest feasible
  // oscillation value, exactly.
  MeshScratch scratch;
  double bad = -1e-300, good = osc_all;
  while (true) {
    double mid = bad + 0.5 * (good - bad);
    if (!(mid > bad) || !(mid < good)) break;
    if (mesh_feasible(q, vals, lo, hi, delta, mid, scratch))
      good = mid;
    else
      bad = mid;
  }
  return good;
}

double modulus_grid_bound(const AgedPath& p, double delta, double lo,
                          double hi) {
  if (!(delta > 0.0)) throw ConfigError("modulus: delta must be positive");
  if (lo < p.birth || hi > p.horizon || !(lo < hi))
    throw ConfigError("modulus: window outside the path domain");
  double worst = 0.0;
  double cell_end = lo + delta;
  double standing = p.value_at(lo);
  double mx = standing, mn = standing;
  auto flush = [&] { worst = std::max(worst, mx - mn); };
  for (const Jump& j : p.jumps) {
    if (j.time <= lo) continue;
    if (j.time > hi) break;
    if (j.time >= cell_end) {
      flush();
      double k = std::ceil((j.time - lo) / delta);
      cell_end = lo + k * delta;
      if (cell_end <= j.time) cell_end += delta;  // boundary goes right
      mx = mn = standing;
    }
    standing = j.value;
    mx = std::max(mx, standing);
    mn = std::min(mn, standing);
  }
  flush();
  return worst;
}

// ---------------------------------------------------------------------------
// Piecewise-linear cadlag functions: trajectories are slope-0 pieces, age
// functions slope-1 pieces.
// ---------------------------------------------------------------------------

namespace {

struct Seg {
  double t;      // segment start
  double v;      // value at start
  double slope;  // 0 for trajectories, 1 for ages
};

struct PLF {
  std::vector<Seg> segs;
  double t0 = 0.0, t1 = 0.0;

  double eval(double t) const {
    auto it = std::upper_bound(
        segs.begin(), segs.end(), t,
        [](double lhs, const Seg& s) { return lhs < s.t; });
    const Seg& s = *(it - 1);
    return s.v + s.slope * (t - s.t);
  }
  double eval_left(double t) const {
    auto it = std::lower_bound(
        segs.begin(), segs.end(), t,
        [](const Seg& s, double rhs) { return s.t < rhs; });
    if (it == segs.begin()) return it->v;  // t at or before the domain start
    const Seg& s = *(it - 1);
    return s.v + s.slope * (t - s.t);
  }
};

PLF plf_trajectory(const AgedPath& p, double clip_lo, double clip_hi) {
  PLF f;
  f.t0 = std::max(p.birth, clip_lo);
  f.t1 = std::min(p.horizon, clip_hi);
  f.segs.push_back({f.t0, p.value_at(f.t0), 0.0});
  for (const Jump& j : p.jumps) {
    if (j.time <= f.t0) continue;
    if (j.time > f.t1) break;
    f.segs.push_back({j.time, j.value, 0.0});
  }
  return f;
}

PLF plf_age(const AgedPath& p, double clip_lo, double clip_hi) {
  PLF f;
  f.t0 = std::max(p.birth, clip_lo);
  f.t1 = std::min(p.horizon, clip_hi);
  f.segs.push_back({f.t0, f.t0 - p.origin_at(f.t0), 1.0});
  for (const AgeJump& j : p.age_jumps) {
    if (j.time <= f.t0) continue;
    if (j.time > f.t1) break;
    f.segs.push_back({j.time, j.time - j.origin, 1.0});
  }
  return f;
}

// Grid: multiples of h (absolute anchoring, so halving h refines nestedly)
// plus all segment starts and both endpoints.
std::vector<double> build_grid(const PLF& f, const MetricOptions& opts) {
  double h = opts.grid_resolution;
  double len = f.t1 - f.t0;
  if (len / h > opts.max_grid_points)
    h = len / static_cast<double>(opts.max_grid_points);
  std::vector<double> g;
  g.push_back(f.t0);
  double k0 = std::floor(f.t0 / h) + 1.0;
  for (double k = k0; k * h < f.t1; ++k) {
    double t = k * h;
    if (t > f.t0) g.push_back(t);
  }
  for (const Seg& s : f.segs)
    if (s.t > f.t0 && s.t < f.t1) g.push_back(s.t);
  g.push_back(f.t1);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

double weight_at(double t, bool weighted) {
  return weighted ? std::exp(-std::abs(t)) : 1.0;
}

double interval_weight(double u0, double u1, bool weighted) {
  if (!weighted) return 1.0;
  double m = (u0 <= 0.0 && u1 >= 0.0) ? 0.0 : std::min(std::abs(u0), std::abs(u1));
  return std::exp(-m);
}

// sup over [u0,u1] of weight * min(1, |(A(t),t) - (B(g t), g t)|) for the
// linear match g([u0,u1]) = [w0,w1]. Exact for the unweighted metric
// (the squared distance is convex piecewise); an upper bound when weighted.
double edge_space_cost(const PLF& A, const PLF& B, double u0, double u1,
                       double w0, double w1, bool weighted) {
  double sigma = (w1 - w0) / (u1 - u0);
  std::vector<double> cuts;
  cuts.push_back(u0);
  auto seg_lower = [](const std::vector<Seg>& segs, double t) {
    return std::upper_bound(
        segs.begin(), segs.end(), t,
        [](double lhs, const Seg& s) { return lhs < s.t; });
  };
  for (auto it = seg_lower(A.segs, u0); it != A.segs.end() && it->t < u1; ++it)
    cuts.push_back(it->t);
  if (sigma > 0) {
    for (auto it = seg_lower(B.segs, w0); it != B.segs.end() && it->t < w1;
         ++it)
      cuts.push_back(u0 + (it->t - w0) / sigma);
  }
  cuts.push_back(u1);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto dist = [&](double av, double bv, double t, double w) {
    return std::hypot(av - bv, t - w);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    double wa = w0 + sigma * (a - u0), wb = w0 + sigma * (b - u0);
    double r0 = dist(A.eval(a), B.eval(wa), a, wa);
    double r1 = dist(A.eval_left(b), B.eval_left(wb), b, wb);
    double sup = std::min(1.0, std::max(r0, r1));
    total = std::max(total, interval_weight(a, b, weighted) * sup);
  }
  // the final right endpoint's own value
  double rend = dist(A.eval(u1), B.eval(w1), u1, w1);
  total = std::max(total, weight_at(u1, weighted) * std::min(1.0, rend));
  return total;
}

struct DirValue {
  double space = kInf;
  double slope = kInf;
};

bool dir_less(const DirValue& a, const DirValue& b) {
  return a.space < b.space || (a.space == b.space && a.slope < b.slope);
}

// One directed search A -> B restricted to edges with slope cost <= beta.
DirValue dp_direction(const PLF& A, const PLF& B,
                      const std::vector<double>& ga,
                      const std::vector<double>& gb, double beta,
                      const MetricOptions& opts, bool weighted) {
  const int na = static_cast<int>(ga.size());
  const int nb = static_cast<int>(gb.size());
  const int K = std::max(1, opts.max_segment_skip);
  std::vector<DirValue> f(static_cast<std::size_t>(na) * nb);
  auto at = [&](int i, int j) -> DirValue& {
    return f[static_cast<std::size_t>(i) * nb + j];
  };
  for (auto& v : f) v = DirValue{kInf, kInf};
  at(0, 0) = DirValue{0.0, 0.0};
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      const DirValue cur = at(i, j);
      if (cur.space == kInf) continue;
      for (int di = 1; di <= K && i + di < na; ++di) {
        for (int dj = 1; dj <= K && j + dj < nb; ++dj) {
          int ii = i + di, jj = j + dj;
          double u0 = ga[i], u1 = ga[ii];
          double w0 = gb[j], w1 = gb[jj];
          double sigma = (w1 - w0) / (u1 - u0);
          double sc = std::abs(sigma - 1.0) * interval_weight(u0, u1, weighted);
          if (sc > beta) continue;
          DirValue cand = cur;
          cand.slope = std::max(cand.slope, sc);
          double spc = edge_space_cost(A, B, u0, u1, w0, w1, weighted);
          cand.space = std::max(cand.space, spc);
          DirValue& tgt = at(ii, jj);
          if (dir_less(cand, tgt)) tgt = cand;
        }
      }
    }
  }
  return at(na - 1, nb - 1);
}

// min over beta caps of (space(beta) + achieved slope), walking the caps
// down from unconstrained.
double directed_metric(const PLF& A, const PLF& B, const MetricOptions& opts,
                       bool weighted) {
  std::vector<double> ga = build_grid(A, opts);
  std::vector<double> gb = build_grid(B, opts);
  double best = kInf;
  double beta = kInf;
  for (int iter = 0; iter < 48; ++iter) {
    DirValue v = dp_direction(A, B, ga, gb, beta, opts, weighted);
    if (v.space == kInf) break;
    best = std::min(best, v.space + v.slope);
    if (v.space >= best || v.slope <= 0.0) break;
    beta = v.slope * (1.0 - 1e-12) - 1e-300;
  }
  return best;
}

double component_metric(const PLF& A, const PLF& B, const MetricOptions& opts,
                        bool weighted) {
  return std::max(directed_metric(A, B, opts, weighted),
                  directed_metric(B, A, opts, weighted));
}

void require_proper(const AgedPath& p, const char* who) {
  if (!(p.horizon > p.birth))
    throw ConfigError(std::string(who) + ": degenerate path domain");
}

}  // namespace

double metric_d(const AgedPath& p1, const AgedPath& p2,
                const MetricOptions& opts) {
  require_proper(p1, "metric_d");
  require_proper(p2, "metric_d");
  if (p1.same_triple(p2)) return 0.0;
  double birth_term = std::abs(p1.birth - p2.birth);
  const double lo = -kInf, hi = kInf;
  double dg = component_metric(plf_trajectory(p1, lo, hi),
                               plf_trajectory(p2, lo, hi), opts, false);
  double da = component_metric(plf_age(p1, lo, hi), plf_age(p2, lo, hi), opts,
                               false);
  return birth_term + std::max(dg, da);
}

double metric_d1(const AgedPath& p1, const AgedPath& p2,
                 const MetricOptions& opts) {
  require_proper(p1, "metric_d1");
  require_proper(p2, "metric_d1");
  if (p1.same_triple(p2)) return 0.0;
  double birth_term = std::abs(std::tanh(p1.birth) - std::tanh(p2.birth));
  const double cap = opts.horizon_cap;
  double dg = component_metric(plf_trajectory(p1, -cap, cap),
                               plf_trajectory(p2, -cap, cap), opts, true);
  double da =
      component_metric(plf_age(p1, -cap, cap), plf_age(p2, -cap, cap), opts,
                       true);
  return birth_term + std::max(dg, da);
}

double metric_d_restricted(const std::optional<AgedPath>& p1,
                           const std::optional<AgedPath>& p2,
                           const MetricOptions& opts) {
  if (!p1 && !p2) return 0.0;
  if (!p1 || !p2) return 1.0;
  return metric_d(*p1, *p2, opts);
}

namespace {

std::vector<std::optional<AgedPath>> projections(const AgedPath& p,
                                                 const MetricOptions& opts) {
  std::vector<std::optional<AgedPath>> out;
  out.reserve(opts.rho_terms);
  for (int n = 1; n <= opts.rho_terms; ++n)
    out.push_back(operators::project_single(p, n));
  return out;
}

double rho_from_projections(const std::vector<std::optional<AgedPath>>& a,
                            const std::vector<std::optional<AgedPath>>& b,
                            const MetricOptions& opts) {
  double total = 0.0;
  for (int n = 1; n <= opts.rho_terms; ++n) {
    double term = metric_d_restricted(a[n - 1], b[n - 1], opts);
    total += std::ldexp(std::min(1.0, term), -n);
  }
  return total;
}

// Cheap lower bound: each d term is at least the entry-time gap, and an
// empty/nonempty mismatch contributes exactly 1.
double rho_lower_bound(const std::vector<std::optional<AgedPath>>& a,
                       const std::vector<std::optional<AgedPath>>& b,
                       const MetricOptions& opts) {
  double total = 0.0;
  for (int n = 1; n <= opts.rho_terms; ++n) {
    const auto& pa = a[n - 1];
    const auto& pb = b[n - 1];
    double term;
    if (!pa && !pb)
      term = 0.0;
    else if (!pa || !pb)
      term = 1.0;
    else
      term = std::min(1.0, std::abs(pa->birth - pb->birth));
    total += std::ldexp(term, -n);
  }
  return total;
}

}  // namespace

double metric_rho(const AgedPath& p1, const AgedPath& p2,
                  const MetricOptions& opts) {
  if (p1.same_triple(p2)) return 0.0;
  return rho_from_projections(projections(p1, opts), projections(p2, opts),
                              opts);
}

double metric_d_window_shift(const AgedPath& p, double t0, double t1,
                             double eta1, double eta2) {
  if (!(t1 > t0) || eta1 < 0.0 || eta2 < 0.0 || t0 + eta1 >= t1 + eta2 ||
      t1 + eta2 > p.horizon || t0 < p.birth)
    throw ConfigError("metric_d_window_shift: bad window");
  PLF a = plf_trajectory(p, t0, t1);
  PLF b = plf_trajectory(p, t0 + eta1, t1 + eta2);

  const double len = t1 - t0;
  auto objective = [&](const std::vector<std::pair<double, double>>& g) {
    double space = 0.0, slope = 0.0;
    for (std::size_t s = 0; s + 1 < g.size(); ++s) {
      double u0 = g[s].first, u1 = g[s + 1].first;
      double w0 = g[s].second, w1 = g[s + 1].second;
      if (!(u1 > u0) || !(w1 > w0)) return kInf;
      slope = std::max(slope, std::abs((w1 - w0) / (u1 - u0) - 1.0));
      space = std::max(space, edge_space_cost(a, b, u0, u1, w0, w1, false));
    }
    return std::abs(t0 - (t0 + eta1)) + space + slope;
  };

  double best = kInf;
  // single linear stretch
  best = std::min(best, objective({{t0, t0 + eta1}, {t1, t1 + eta2}}));
  for (double frac : {0.05, 0.15, 0.4}) {
    double h1 = std::max(2.0 * eta1, frac * len);
    double h2 = std::max(2.0 * eta2, frac * len);
    if (h1 + h2 >= len) continue;
    // ramp in, identity in the middle, ramp out
    best = std::min(best, objective({{t0, t0 + eta1},
                                     {t0 + h1, t0 + h1},
                                     {t1 - h2, t1 - h2},
                                     {t1, t1 + eta2}}));
  }
  return best;
}

double hausdorff(const PathCollection& c1, const PathCollection& c2,
                 const MetricOptions& opts) {
  if (c1.paths.empty() && c2.paths.empty()) return 0.0;
  if (c1.paths.empty() || c2.paths.empty()) return 1.0;

  std::vector<std::vector<std::optional<AgedPath>>> pr1, pr2;
  for (const AgedPath& p : c1.paths) pr1.push_back(projections(p, opts));
  for (const AgedPath& p : c2.paths) pr2.push_back(projections(p, opts));

  auto directed = [&](const PathCollection& from,
                      const std::vector<std::vector<std::optional<AgedPath>>>& pf,
                      const PathCollection& to,
                      const std::vector<std::vector<std::optional<AgedPath>>>& pt) {
    double worst = 0.0;
    for (std::size_t i = 0; i < from.paths.size(); ++i) {
      std::vector<std::pair<double, std::size_t>> order;
      order.reserve(to.paths.size());
      bool exact = false;
      for (std::size_t j = 0; j < to.paths.size(); ++j) {
        if (from.paths[i].same_triple(to.paths[j])) {
          exact = true;
          break;
        }
        order.emplace_back(rho_lower_bound(pf[i], pt[j], opts), j);
      }
      if (exact) continue;
      std::sort(order.begin(), order.end());
      double best = kInf;
      for (const auto& [lb, j] : order) {
        if (lb >= best) break;
        best = std::min(best, rho_from_projections(pf[i], pt[j], opts));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };

  return std::max(directed(c1, pr1, c2, pr2), directed(c2, pr2, c1, pr1));
}

}  // namespace stableweb::metrics
