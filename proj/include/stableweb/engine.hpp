#pragma once

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "stableweb/aged_path.hpp"
#include "stableweb/sampling.hpp"

namespace stableweb::engine {

// Coalescence precedence: lower compares first and survives. Dyadic grids
// give older (coarser) levels precedence; within a level the rule is
// lexicographic in (birth time, birth position), with the walker id as a
// final deterministic tiebreak for duplicated start points.
struct OriginRank {
  std::int32_t grid_level = 0;
  double birth_time = 0.0;
  std::int64_t birth_site = 0;
};

inline bool rank_less(const OriginRank& a, const OriginRank& b) {
  if (a.grid_level != b.grid_level) return a.grid_level < b.grid_level;
  if (a.birth_time != b.birth_time) return a.birth_time < b.birth_time;
  return a.birth_site < b.birth_site;
}

enum class Retention {
  FullPaths,      // own trajectory segments for every walker
  AgeFiltered,    // segments only for walkers living at least retention_age
  EventsOnly,     // births, events and snapshots; no trajectories
  SnapshotsOnly,  // recycled walker slots; snapshots only
};

struct FullOccupancy {
  double birth_time = 0.0;
};

// The grid D_level = 2^-level Z intersected with the torus, launched at
// time 0. Points keep the coarsest level containing them as their rank.
struct DyadicGrid {
  int level = 0;
};

// One walker per (theta_space i, theta_time j) in the window. theta_space
// at or below the lattice spacing means full spatial occupancy per wave.
// With dyadic_levels set (theta a power of two), points rank by the
// coarsest dyadic grid containing them, which makes coupled runs with
// nested theta values exact refinements of each other.
struct ThetaGrid {
  double theta_space = 0.25;
  double theta_time = 0.25;
  double x_half_width = 1.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  bool dyadic_levels = false;
  // Births at j * theta_time + time_offset; a generic offset keeps ages off
  // the exact dyadic values probed by the compactness conditions.
  double time_offset = 0.0;
};

struct ExplicitPoint {
  double time = 0.0;
  double position = 0.0;  // physical units
  std::int32_t level = 0;
};

struct ExplicitPoints {
  std::vector<ExplicitPoint> points;
};

using StartSpec =
    std::variant<FullOccupancy, DyadicGrid, ThetaGrid, ExplicitPoints>;

// n^{-1/alpha}, snapped to an exact power of two when the exponent is
// integral (n = 2^{3m} at alpha = 3/2, say), so dyadic grids embed exactly.
double lattice_spacing(std::int64_t scale_n, double alpha);

// Sites sit at (site + 1/pi) * spacing: the offset keeps every lattice
// value away from the dyadic square boundaries used by the projections.
inline constexpr double kSiteOffset = 0.3183098861837907;

inline double site_position(std::int64_t site, double spacing) {
  return (static_cast<double>(site) + kSiteOffset) * spacing;
}

inline std::int64_t site_of_position(double x, double spacing) {
  return std::llround(x / spacing - kSiteOffset);
}

struct SimConfig {
  sampling::IncrementLaw law;
  double alpha = 1.5;
  std::int64_t scale_n = 1024;
  std::int64_t sites = 1 << 16;  // torus size in lattice units
  double horizon = 1.0;
  std::uint64_t seed = 1;
  std::uint32_t replica = 0;
  StartSpec start = FullOccupancy{};
  std::vector<double> sample_times;
  Retention retention = Retention::FullPaths;
  double retention_age = 0.0;
  bool stop_when_single = false;  // used by two-walker meeting runs
  std::uint64_t max_events = 1ull << 31;
  std::uint64_t max_path_jumps = 1ull << 26;
};

struct CoalescenceEvent {
  double time;
  std::uint32_t absorbed;
  std::uint32_t survivor;
};

constexpr double kNever = std::numeric_limits<double>::infinity();

struct WalkerInfo {
  double birth_time = 0.0;
  std::int64_t birth_site = 0;
  std::int64_t final_site = 0;
  std::int32_t grid_level = 0;
  double absorbed_time = kNever;
  std::uint32_t absorbed_by = 0;
  bool wrapped = false;
};

struct SiteJump {
  double time;
  std::int64_t site;  // unwrapped
};

// Recorded when a coalescence lowers the walker cluster's oldest birth.
struct OriginJump {
  double time;
  double origin;
};

struct Snapshot {
  double time;
  std::vector<std::int64_t> sites;  // occupied, unwrapped, sorted
  std::vector<double> births;       // aligned with sites
};

struct RunResult {
  double spacing = 1.0;
  std::int64_t sites = 0;
  double horizon = 0.0;
  std::uint32_t replica = 0;
  std::uint64_t total_jumps = 0;
  std::uint64_t live_walkers = 0;
  std::uint64_t born_walkers = 0;
  std::uint64_t wrapped_walkers = 0;
  Retention retention = Retention::FullPaths;
  double retention_age = 0.0;
  std::vector<WalkerInfo> walkers;
  std::vector<CoalescenceEvent> events;
  std::vector<Snapshot> snapshots;
  std::vector<std::vector<SiteJump>> own_jumps;  // per walker, when retained
  std::vector<std::vector<OriginJump>> own_age_jumps;
  PathCollection paths;  // filled by compute_ages
};

// Event-driven simulation: per-walker exponential clocks at rate
// n (1 - p(0)) and p-distributed nonzero jumps; landing on an occupied
// site absorbs the higher-rank walker. Walker randomness is keyed by the
// start point, so enlarging the start set never perturbs existing walkers.
RunResult run_coalescing(const SimConfig& config);

// Materializes aged paths from the retained segments and the event log:
// an absorbed walker's future as well as its age follow the survivor chain.
// Idempotent; throws StateError on an inconsistent event log.
void compute_ages(RunResult& result);

// Nested runs sharing per-start-point randomness; coarser levels are exact
// subsets of finer ones at all times.
std::vector<RunResult> run_dyadic_hierarchy(const std::vector<int>& levels,
                                            SimConfig base);

// Square theta-grid convenience wrapper.
RunResult run_theta_grid(double theta, double x_half_width, double t_lo,
                         double t_hi, SimConfig base);

}  // namespace stableweb::engine
