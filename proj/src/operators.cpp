#include "stableweb/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stableweb/errors.hpp"

namespace stableweb::operators {

namespace {
constexpr double kAgeTol = 1e-12;
}

void validate(const Rectangle& r) {
  if (!(r.t_lo < r.t_hi) || !(r.x_lo < r.x_hi))
    throw ConfigError("Rectangle: need S < T and A < B");
}

Rectangle square(int n) {
  double nn = static_cast<double>(n);
  return Rectangle{-nn, nn, -nn, nn};
}

std::optional<AgedPath> filter_age_single(const AgedPath& p, double delta) {
  if (!(delta > 0.0)) throw ConfigError("filter_age: delta must be positive");

  double cut;
  if (p.initial_age() >= delta - kAgeTol) {
    cut = p.birth;  // inherited age, kept from the domain start
  } else {
    // Age grows at slope 1 between jumps: within the segment anchored at
    // `origin` it reaches delta at origin + delta. The sum is computed from
    // the stored origin, so merged paths cut at bit-identical times.
    double origin = p.age_origin;
    cut = p.horizon + 1.0;
    bool found = false;
    for (const AgeJump& j : p.age_jumps) {
      double hit = origin + delta;
      if (hit < j.time) {  // continuous passage inside this segment
        cut = hit;
        found = true;
        break;
      }
      if (j.time - j.origin >= delta - kAgeTol) {
        // The jump carries the age to or past delta: suppressed, including
        // a landing exactly on delta (the continuous representative of the
        // merged cluster is kept instead).
        return std::nullopt;
      }
      origin = j.origin;
    }
    if (!found) {
      double hit = origin + delta;
      if (hit > p.horizon) return std::nullopt;  // never reaches age delta
      cut = hit;
    }
  }

  AgedPath out;
  out.birth = cut;
  out.initial_value = p.value_at(cut);
  out.age_origin = p.origin_at(cut);
  out.horizon = p.horizon;
  out.replica = p.replica;
  out.walker = p.walker;
  for (const Jump& j : p.jumps)
    if (j.time > cut) out.jumps.push_back(j);
  for (const AgeJump& j : p.age_jumps)
    if (j.time > cut) out.age_jumps.push_back(j);
  return out;
}

PathCollection filter_age(const PathCollection& c, double delta) {
  PathCollection out;
  out.paths.reserve(c.paths.size());
  for (const AgedPath& p : c.paths)
    if (auto f = filter_age_single(p, delta)) out.paths.push_back(*f);
  out.canonicalize();
  return out;
}

RestrictedAgedPath restrict_path(const AgedPath& p, const Rectangle& r) {
  validate(r);
  RestrictedAgedPath out;
  if (p.birth > r.t_hi) return out;  // the paper's emptiness clause

  const double t_end = std::min(r.t_hi, p.horizon);
  const double s0 = std::max(p.birth, r.t_lo);
  if (s0 > t_end) return out;

  auto inside = [&](double v) { return v >= r.x_lo && v <= r.x_hi; };

  double entry = t_end + 1.0;
  if (inside(p.value_at(s0))) {
    entry = s0;
  } else {
    for (const Jump& j : p.jumps) {
      if (j.time <= s0) continue;
      if (j.time > t_end) break;
      if (inside(j.value)) {
        entry = j.time;
        break;
      }
    }
  }
  // No entry by T, or entry right at the window end (degenerate domain).
  if (entry >= t_end) return out;

  auto clamp = [&](double v) { return std::min(std::max(v, r.x_lo), r.x_hi); };

  out.empty = false;
  AgedPath& q = out.path;
  q.birth = entry;
  q.initial_value = clamp(p.value_at(entry));
  q.age_origin = p.origin_at(entry);
  q.horizon = t_end;
  q.replica = p.replica;
  q.walker = p.walker;
  out.unclamped_abs_max = std::abs(p.value_at(entry));
  double prev = q.initial_value;
  for (const Jump& j : p.jumps) {
    if (j.time <= entry) continue;
    if (j.time > t_end) break;
    out.unclamped_abs_max = std::max(out.unclamped_abs_max, std::abs(j.value));
    double v = clamp(j.value);
    if (v != prev) {
      q.jumps.push_back({j.time, v});
      prev = v;
    }
  }
  for (const AgeJump& j : p.age_jumps) {
    if (j.time <= entry) continue;
    if (j.time > t_end) break;
    q.age_jumps.push_back(j);
  }
  return out;
}

std::optional<AgedPath> project_single(const AgedPath& p, int n) {
  if (n < 1) throw ConfigError("project: N must be >= 1, got " + std::to_string(n));
  auto f = filter_age_single(p, std::ldexp(1.0, -n));
  if (!f) return std::nullopt;
  RestrictedAgedPath r = restrict_path(*f, square(n));
  if (r.empty) return std::nullopt;
  return r.path;
}

PathCollection project(const PathCollection& c, int n) {
  PathCollection out;
  for (const AgedPath& p : c.paths)
    if (auto q = project_single(p, n)) out.paths.push_back(*q);
  out.canonicalize();
  return out;
}

}  // namespace stableweb::operators
