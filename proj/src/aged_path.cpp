#include "stableweb/aged_path.hpp"

#include <algorithm>
#include <tuple>

namespace stableweb {

namespace {

const Jump* last_jump_at(const std::vector<Jump>& js, double t) {
  auto it = std::upper_bound(
      js.begin(), js.end(), t,
      [](double lhs, const Jump& j) { return lhs < j.time; });
  if (it == js.begin()) return nullptr;
  return &*(it - 1);
}

const AgeJump* last_age_jump_at(const std::vector<AgeJump>& js, double t) {
  auto it = std::upper_bound(
      js.begin(), js.end(), t,
      [](double lhs, const AgeJump& j) { return lhs < j.time; });
  if (it == js.begin()) return nullptr;
  return &*(it - 1);
}

}  // namespace

double AgedPath::value_at(double t) const {
  const Jump* j = last_jump_at(jumps, t);
  return j ? j->value : initial_value;
}

double AgedPath::origin_at(double t) const {
  const AgeJump* j = last_age_jump_at(age_jumps, t);
  return j ? j->origin : age_origin;
}

double AgedPath::age_at(double t) const { return t - origin_at(t); }

bool AgedPath::same_triple(const AgedPath& other) const {
  return birth == other.birth && initial_value == other.initial_value &&
         age_origin == other.age_origin && horizon == other.horizon &&
         jumps == other.jumps && age_jumps == other.age_jumps;
}

bool triple_less(const AgedPath& a, const AgedPath& b) {
  auto key = [](const AgedPath& p) {
    return std::make_tuple(p.birth, p.initial_value, p.age_origin, p.horizon,
                           p.jumps.size(), p.age_jumps.size());
  };
  auto ka = key(a), kb = key(b);
  if (ka != kb) return ka < kb;
  for (std::size_t i = 0; i < a.jumps.size(); ++i) {
    auto ja = std::make_pair(a.jumps[i].time, a.jumps[i].value);
    auto jb = std::make_pair(b.jumps[i].time, b.jumps[i].value);
    if (ja != jb) return ja < jb;
  }
  for (std::size_t i = 0; i < a.age_jumps.size(); ++i) {
    auto ja = std::make_pair(a.age_jumps[i].time, a.age_jumps[i].origin);
    auto jb = std::make_pair(b.age_jumps[i].time, b.age_jumps[i].origin);
    if (ja != jb) return ja < jb;
  }
  return std::make_pair(a.replica, a.walker) < std::make_pair(b.replica, b.walker);
}

bool check_age_invariant(const AgedPath& p, double tol) {
  double prev_t = p.birth;
  double prev_origin = p.age_origin;
  if (p.initial_age() < -tol) return false;
  for (const AgeJump& j : p.age_jumps) {
    if (j.time < prev_t || j.time > p.horizon) return false;
    if (j.origin >= prev_origin) return false;  // jumps must go strictly up
    prev_t = j.time;
    prev_origin = j.origin;
  }
  for (const Jump& j : p.jumps)
    if (j.time < p.birth || j.time > p.horizon) return false;
  return true;
}

void PathCollection::canonicalize() {
  std::sort(paths.begin(), paths.end(), triple_less);
  paths.erase(std::unique(paths.begin(), paths.end(),
                          [](const AgedPath& a, const AgedPath& b) {
                            return a.same_triple(b);
                          }),
              paths.end());
}

bool PathCollection::contains_all(const PathCollection& other) const {
  for (const AgedPath& q : other.paths) {
    bool found = false;
    for (const AgedPath& p : paths)
      if (p.same_triple(q)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

bool PathCollection::same_paths(const PathCollection& other) const {
  return contains_all(other) && other.contains_all(*this);
}

}  // namespace stableweb
