#pragma once

#include <cstdint>
#include <vector>

namespace stableweb {

struct Jump {
  double time;
  double value;
  bool operator==(const Jump&) const = default;
};

// Upward age jump at `time`: the age function afterwards is t - origin.
// Anchoring to origins (the birth time of the oldest path through the point)
// keeps ages of merged paths bit-identical, which the operator identities
// rely on.
struct AgeJump {
  double time;
  double origin;
  bool operator==(const AgeJump&) const = default;
};

// An aged path: birth time, cadlag step trajectory, and a cadlag age
// function that grows at slope 1 between strictly upward jumps. The
// recorded domain is [birth, horizon]. age(t) = t - origin of the segment
// containing t; age_origin anchors the first segment.
struct AgedPath {
  double birth = 0.0;
  double initial_value = 0.0;
  double age_origin = 0.0;
  double horizon = 0.0;
  std::vector<Jump> jumps;         // (time, new trajectory value)
  std::vector<AgeJump> age_jumps;  // (time, new age origin), origins decreasing

  // Provenance; not part of path identity.
  std::uint32_t replica = 0;
  std::uint32_t walker = 0;

  double value_at(double t) const;
  double age_at(double t) const;
  // Age origin governing times in [t, next jump).
  double origin_at(double t) const;
  double initial_age() const { return birth - age_origin; }

  // Set identity on the mathematical triple only.
  bool same_triple(const AgedPath& other) const;
};

// Orders by (birth, initial value, trajectory, age data); provenance only
// breaks exact triple ties so writes stay deterministic.
bool triple_less(const AgedPath& a, const AgedPath& b);

// Checks the age superadditivity invariant: age(s) - age(s') >= s - s' with
// strictly upward jumps (strictly decreasing origins). Returns false on the
// first violation.
bool check_age_invariant(const AgedPath& p, double tol = 1e-12);

struct PathCollection {
  std::vector<AgedPath> paths;

  // Sorts canonically and removes duplicate triples (set semantics).
  void canonicalize();
  bool contains_all(const PathCollection& other) const;
  bool same_paths(const PathCollection& other) const;
};

}  // namespace stableweb
