#pragma once

#include <optional>

#include "stableweb/aged_path.hpp"

namespace stableweb::operators {

// Time-space rectangle [S,T] x [A,B].
struct Rectangle {
  double t_lo, t_hi;  // S, T
  double x_lo, x_hi;  // A, B
};

void validate(const Rectangle& r);

Rectangle square(int n);  // [-N,N]^2

struct RestrictedAgedPath {
  bool empty = true;
  AgedPath path;               // entry time as birth; spatially clamped
  double unclamped_abs_max = 0.0;  // sup |gamma| over the restricted window,
                                   // before clamping
};

// Phi_delta on one path: cut to [A(delta), horizon] where A(delta) is the
// first time the age reaches delta. Returns nothing when the age is raised
// past delta by a coalescence jump (the path is suppressed). An initial age
// already >= delta counts as inherited, not jumped, and the path is kept
// from its domain start; this is what makes Pi_N . Pi_{N+1} contain Pi_N.
std::optional<AgedPath> filter_age_single(const AgedPath& p, double delta);

// Phi_delta on a collection: pathwise filtering, suppression, then set
// deduplication (coincident delta-paths collapse to one representative).
PathCollection filter_age(const PathCollection& c, double delta);

// The restriction of an aged path to a rectangle: entry time
// inf{r > b v S : gamma(r) in [A,B]}, trajectory clamped to [A,B], age
// restricted in time but never clamped in value. Empty when the path is born
// after T or never enters [A,B] by T.
RestrictedAgedPath restrict_path(const AgedPath& p, const Rectangle& r);

// Pi_N = Psi_N . Phi_{2^-N}; empty restrictions are dropped.
std::optional<AgedPath> project_single(const AgedPath& p, int n);
PathCollection project(const PathCollection& c, int n);

}  // namespace stableweb::operators
