#pragma once

// Independent brute-force oracles for the metric tests and the acceptance
// suite. These deliberately re-derive results by exhaustive search rather
// than calling into the library internals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stableweb/aged_path.hpp"

namespace oracles {

// Exhaustive delta-modulus for paths with few jumps: enumerate groupings of
// jumps into consecutive cells and whether each cell starts exactly on its
// first jump, then propagate minimal feasible breakpoints forward.
inline double modulus_exhaustive(const stableweb::AgedPath& p, double delta,
                                 double lo, double hi) {
  std::vector<double> q;
  std::vector<double> vals;
  vals.push_back(p.value_at(lo));
  for (const stableweb::Jump& j : p.jumps) {
    if (j.time <= lo) continue;
    if (j.time > hi) break;
    if (j.value == vals.back()) continue;
    q.push_back(j.time);
    vals.push_back(j.value);
  }
  const int J = static_cast<int>(q.size());
  if (J == 0) return 0.0;

  auto osc = [&](int a, int b) {  // over vals[a..b]
    double mx = vals[a], mn = vals[a];
    for (int k = a; k <= b; ++k) {
      mx = std::max(mx, vals[k]);
      mn = std::min(mn, vals[k]);
    }
    return mx - mn;
  };

  double best = std::numeric_limits<double>::infinity();
  // grouping mask: bit k set => a cell boundary between jumps k and k+1
  for (int mask = 0; mask < (1 << (J - 1)); ++mask) {
    std::vector<int> heads{0};
    for (int k = 0; k + 1 < J; ++k)
      if (mask & (1 << k)) heads.push_back(k + 1);
    heads.push_back(J);  // sentinel
    int cells = static_cast<int>(heads.size()) - 1;
    for (int vm = 0; vm < (1 << cells); ++vm) {
      // vm bit c set => cell c starts exactly on its first jump
      double s = lo;
      int s_eps = 0;
      bool ok = true;
      double worst = 0.0;
      for (int c = 0; c < cells && ok; ++c) {
        int first = heads[c], last = heads[c + 1] - 1;
        bool at = vm & (1 << c);
        if (c == 0) {
          if (at) {
            // one leading pad cell (or a start exactly at lo)
            if (!(q[first] - lo >= delta || lo == q[first])) ok = false;
            s = q[first];
            s_eps = 0;
          }
        } else {
          // breakpoint t: t > q[first-1], t >= prev_s + delta, and t == q[first]
          // when the cell starts on its jump, else t < q[first]
          if (at) {
            double need = s + delta;
            if (!(need < q[first] || (need == q[first] && s_eps == 0)))
              ok = false;
            s = q[first];
            s_eps = 0;
          } else {
            double t = s + delta;
            int t_eps = s_eps;
            if (t < q[first - 1] || (t == q[first - 1] && t_eps <= 1)) {
              t = q[first - 1];
              t_eps = 1;
            }
            if (!(t < q[first])) ok = false;
            s = t;
            s_eps = t_eps;
          }
        }
        if (!ok) break;
        worst = std::max(worst, osc(at ? first + 1 : first, last + 1));
      }
      if (!ok) continue;
      double need = s + delta;
      if (!(need < hi || (need == hi && s_eps == 0))) continue;
      best = std::min(best, worst);
    }
  }
  return best;
}

// Brute-force d between two piecewise-constant paths: enumerate all monotone
// breakpoint matchings on the given grids (no skip cap) and evaluate the
// objective by dense sampling.
struct BruteOptions {
  int samples_per_segment = 200;
  bool weighted = false;  // e^{-|t|} weights and tanh birth term
};

inline double brute_metric_d(const stableweb::AgedPath& a,
                             const stableweb::AgedPath& b,
                             std::vector<double> ga, std::vector<double> gb,
                             const BruteOptions& opt = {}) {
  auto objective = [&](const std::vector<std::pair<double, double>>& m) {
    double space = 0.0, slope = 0.0;
    for (std::size_t s = 0; s + 1 < m.size(); ++s) {
      double u0 = m[s].first, u1 = m[s + 1].first;
      double w0 = m[s].second, w1 = m[s + 1].second;
      double sg = (w1 - w0) / (u1 - u0);
      double sl = std::abs(sg - 1.0);
      if (opt.weighted) {
        double mn = (u0 <= 0 && u1 >= 0) ? 0.0
                                         : std::min(std::abs(u0), std::abs(u1));
        sl *= std::exp(-mn);
      }
      slope = std::max(slope, sl);
      for (int k = 0; k <= opt.samples_per_segment; ++k) {
        double t = u0 + (u1 - u0) * k / opt.samples_per_segment;
        double w = w0 + sg * (t - u0);
        double r = std::hypot(a.value_at(t) - b.value_at(w), t - w);
        double v = std::min(1.0, r);
        if (opt.weighted) v *= std::exp(-std::abs(t));
        space = std::max(space, v);
      }
    }
    return space + slope;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> match{{ga.front(), gb.front()}};
  auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> void {
    if (i == ga.size() - 1 && j == gb.size() - 1) {
      best = std::min(best, objective(match));
      return;
    }
    for (std::size_t ii = i + 1; ii < ga.size(); ++ii)
      for (std::size_t jj = j + 1; jj < gb.size(); ++jj) {
        match.push_back({ga[ii], gb[jj]});
        self(self, ii, jj);
        match.pop_back();
      }
  };
  rec(rec, 0, 0);
  double birth = opt.weighted
                     ? std::abs(std::tanh(a.birth) - std::tanh(b.birth))
                     : std::abs(a.birth - b.birth);
  return birth + best;
}

}  // namespace oracles
