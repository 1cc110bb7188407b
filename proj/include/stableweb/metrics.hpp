#pragma once

#include <optional>

#include "stableweb/aged_path.hpp"

namespace stableweb::metrics {

struct MetricOptions {
  // Grid resolution for the bijection search. Grids refine nestedly, so
  // halving h can only lower the reported value.
  double grid_resolution = 0.05;
  // Cap on grid points per path; longer domains coarsen h instead of
  // growing the search without bound.
  int max_grid_points = 256;
  // Max grid steps a single linear piece of g may span.
  int max_segment_skip = 8;
  // Truncation depth for the rho series; the dropped tail is < 2^-rho_terms.
  int rho_terms = 4;
  // d1 domain truncation: beyond this |t| the e^-|t| weight is under 1e-12.
  double horizon_cap = 28.0;
};

// Exact delta-modulus of continuity of the trajectory on [lo, hi]:
// infimum over partitions with mesh >= delta of the largest oscillation
// within a cell. Cells are [t_{i-1}, t_i); breakpoints may sit exactly on a
// jump, which excludes the pre-jump value from the cell.
double modulus(const AgedPath& p, double delta, double lo, double hi);

// Cheap upper bound from the fixed partition into delta-length cells
// anchored at lo; one pass over the jumps.
double modulus_grid_bound(const AgedPath& p, double delta, double lo,
                          double hi);

// Upper approximation of the path metric
//   d = |a-c| + inf_g [ sup (|(gamma1(t),t)-(gamma2(g t),g t)| ^ 1)
//                       + sup |g'-1| ],
// searched over piecewise-linear bijections on nested breakpoint grids and
// symmetrized over the two directions. Aged paths compare as
// d(gamma1,gamma2) v d(a1,a2).
double metric_d(const AgedPath& p1, const AgedPath& p2,
                const MetricOptions& opts = {});

// Same with the tanh birth term and e^-|t| weights inside both sups; the
// ^1 cap applies pointwise before the weight.
double metric_d1(const AgedPath& p1, const AgedPath& p2,
                 const MetricOptions& opts = {});

// d with the empty-path convention: one empty -> 1, both empty -> 0.
double metric_d_restricted(const std::optional<AgedPath>& p1,
                           const std::optional<AgedPath>& p2,
                           const MetricOptions& opts = {});

// rho = sum_N 2^-N min{1, d(Pi_N p1, Pi_N p2)}, truncated at rho_terms
// (certified tail bound 2^-rho_terms).
double metric_rho(const AgedPath& p1, const AgedPath& p2,
                  const MetricOptions& opts = {});

// Hausdorff distance between collections under rho. One empty collection
// against a nonempty one is 1 by convention; two empty collections are 0.
double hausdorff(const PathCollection& c1, const PathCollection& c2,
                 const MetricOptions& opts = {});

// Upper bound on d between the trajectory restricted to [t0, t1] and to
// [t0+eta1, t1+eta2], evaluated exactly on a family of ramp
// reparametrizations (identity in the middle, linear ramps at the ends).
double metric_d_window_shift(const AgedPath& p, double t0, double t1,
                             double eta1, double eta2);

}  // namespace stableweb::metrics
