#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "stableweb/engine.hpp"
#include "stableweb/errors.hpp"
#include "stableweb/operators.hpp"
#include "stableweb/sampling.hpp"

using namespace stableweb;
using namespace stableweb::engine;

namespace {

sampling::IncrementLaw test_law() {
  return sampling::build_increment_law(1.5, 0.25, 64);
}

SimConfig base_config() {
  SimConfig cfg;
  cfg.law = test_law();
  cfg.alpha = 1.5;
  cfg.scale_n = 512;  // spacing 2^-6
  cfg.sites = 1024;
  cfg.horizon = 2.0;
  cfg.seed = 77;
  return cfg;
}

// Independent age oracle: replay the event log and resolve each walker's
// root chain by brute force.
double oracle_origin(const RunResult& r, std::uint32_t w, double t) {
  std::uint32_t cur = w;
  double origin = r.walkers[w].birth_time;
  while (r.walkers[cur].absorbed_time <= t) {
    cur = r.walkers[cur].absorbed_by;
    origin = std::min(origin, r.walkers[cur].birth_time);
  }
  return origin;
}

}  // namespace

TEST_CASE("single walker: one path, age grows at slope one, no events") {
  SimConfig cfg = base_config();
  cfg.start = ExplicitPoints{{{0.0, 0.25, 0}}};
  RunResult r = run_coalescing(cfg);
  CHECK(r.events.empty());
  CHECK(r.live_walkers == 1);
  compute_ages(r);
  REQUIRE(r.paths.paths.size() == 1);
  const AgedPath& p = r.paths.paths[0];
  CHECK(p.birth == 0.0);
  CHECK(p.age_jumps.empty());
  CHECK(p.age_at(1.3) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(check_age_invariant(p));
}

TEST_CASE("two walkers at the same site and time coalesce at birth") {
  SimConfig cfg = base_config();
  cfg.start = ExplicitPoints{{{0.0, 0.0, 0}, {0.0, 0.0, 1}}};
  RunResult r = run_coalescing(cfg);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].time == 0.0);
  // the level-0 point has precedence over the level-1 duplicate
  CHECK(r.walkers[r.events[0].survivor].grid_level == 0);
  CHECK(r.walkers[r.events[0].absorbed].grid_level == 1);
}

TEST_CASE("precedence, conservation and determinism on a theta grid") {
  SimConfig cfg = base_config();
  cfg.start = ThetaGrid{0.125, 0.25, 2.0, 0.0, 1.5};
  cfg.sample_times = {1.6, 1.8, 2.0};  // after the last birth wave
  RunResult r = run_coalescing(cfg);

  CHECK(r.born_walkers > 100);
  CHECK(r.events.size() == r.born_walkers - r.live_walkers);

  for (const CoalescenceEvent& e : r.events) {
    const WalkerInfo& s = r.walkers[e.survivor];
    const WalkerInfo& a = r.walkers[e.absorbed];
    OriginRank rs{s.grid_level, s.birth_time, s.birth_site};
    OriginRank ra{a.grid_level, a.birth_time, a.birth_site};
    CHECK(!rank_less(ra, rs));  // survivor rank <= absorbed rank
  }

  // live count is nonincreasing once births are over
  for (std::size_t i = 1; i < r.snapshots.size(); ++i)
    CHECK(r.snapshots[i].sites.size() <= r.snapshots[i - 1].sites.size());

  RunResult r2 = run_coalescing(cfg);
  REQUIRE(r2.events.size() == r.events.size());
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    CHECK(r.events[i].time == r2.events[i].time);
    CHECK(r.events[i].absorbed == r2.events[i].absorbed);
    CHECK(r.events[i].survivor == r2.events[i].survivor);
  }
  compute_ages(r);
  compute_ages(r2);
  CHECK(r.paths.same_paths(r2.paths));
}

TEST_CASE("ages follow the survivor chain exactly") {
  SimConfig cfg = base_config();
  cfg.start = ThetaGrid{0.25, 0.25, 2.0, 0.0, 1.0};
  RunResult r = run_coalescing(cfg);
  compute_ages(r);
  CHECK(!r.events.empty());

  for (const AgedPath& p : r.paths.paths) {
    CHECK(check_age_invariant(p));
    for (double t : {0.3, 0.9, 1.7}) {
      if (t < p.birth) continue;
      CHECK(p.origin_at(t) == oracle_origin(r, p.walker, t));
    }
  }

  // a walker absorbed by an older one jumps to the older age at that moment
  bool checked = false;
  for (const CoalescenceEvent& e : r.events) {
    const WalkerInfo& a = r.walkers[e.absorbed];
    const WalkerInfo& s = r.walkers[e.survivor];
    if (a.birth_time == s.birth_time) continue;
    for (const AgedPath& p : r.paths.paths) {
      if (p.walker != e.absorbed) continue;
      CHECK(p.age_at(e.time) ==
            doctest::Approx(e.time - oracle_origin(r, e.survivor, e.time)));
      checked = true;
    }
  }
  CHECK(checked);
}

TEST_CASE("filter_age union property against a brute-force age scan") {
  SimConfig cfg = base_config();
  cfg.start = ThetaGrid{0.5, 0.5, 2.0, 0.0, 1.0};
  cfg.sample_times = {1.3};
  RunResult r = run_coalescing(cfg);
  compute_ages(r);

  const double t = 1.3, delta = 0.4;
  PathCollection filtered = operators::filter_age(r.paths, delta);

  std::set<double> covered;
  for (const AgedPath& p : filtered.paths)
    if (p.birth <= t && t <= p.horizon) covered.insert(p.value_at(t));

  // brute force: live walkers whose root age at t is at least delta
  std::set<double> expect;
  REQUIRE(r.snapshots.size() == 1);
  const Snapshot& snap = r.snapshots[0];
  for (std::size_t i = 0; i < snap.sites.size(); ++i)
    if (t - snap.births[i] >= delta)
      expect.insert(site_position(snap.sites[i], r.spacing));

  CHECK(covered == expect);
}

TEST_CASE("dyadic hierarchy nests exactly and replays coarse levels") {
  SimConfig cfg = base_config();
  cfg.horizon = 1.0;
  for (int k = 0; k < 25; ++k)
    cfg.sample_times.push_back(0.04 * (k + 1));
  std::vector<RunResult> runs = run_dyadic_hierarchy({0, 1, 2}, cfg);
  REQUIRE(runs.size() == 3);

  for (std::size_t lvl = 0; lvl + 1 < runs.size(); ++lvl) {
    const RunResult& coarse = runs[lvl];
    const RunResult& fine = runs[lvl + 1];
    REQUIRE(coarse.snapshots.size() == fine.snapshots.size());
    for (std::size_t s = 0; s < coarse.snapshots.size(); ++s) {
      std::set<std::int64_t> cs(coarse.snapshots[s].sites.begin(),
                                coarse.snapshots[s].sites.end());
      std::set<std::int64_t> fs(fine.snapshots[s].sites.begin(),
                                fine.snapshots[s].sites.end());
      CHECK(std::includes(fs.begin(), fs.end(), cs.begin(), cs.end()));
    }
  }

  // level-1 restricted to level-0 start walkers reproduces level-0 paths
  RunResult r0 = runs[0];
  RunResult r1 = runs[1];
  compute_ages(r0);
  compute_ages(r1);
  std::map<std::pair<double, std::int64_t>, const AgedPath*> by_start;
  for (const AgedPath& p : r1.paths.paths) {
    const WalkerInfo& w = r1.walkers[p.walker];
    if (w.grid_level == 0) by_start[{w.birth_time, w.birth_site}] = &p;
  }
  CHECK(!r0.paths.paths.empty());
  for (const AgedPath& p : r0.paths.paths) {
    const WalkerInfo& w = r0.walkers[p.walker];
    auto it = by_start.find({w.birth_time, w.birth_site});
    REQUIRE(it != by_start.end());
    CHECK(p.same_triple(*it->second));
  }
}

TEST_CASE("theta grid start-set edge cases") {
  SimConfig cfg = base_config();

  SUBCASE("theta larger than the window gives a single walker") {
    RunResult r = run_theta_grid(10.0, 1.0, 0.0, 1.0, cfg);
    CHECK(r.born_walkers == 1);
    compute_ages(r);
    CHECK(r.paths.paths.size() == 1);
  }

  SUBCASE("theta-system occupied sites embed in the finer system") {
    // nested dyadic grids with coarser-level precedence couple exactly
    SimConfig fine_cfg = cfg;
    fine_cfg.sample_times = {0.6, 1.2, 1.9};
    cfg.sample_times = fine_cfg.sample_times;
    cfg.start = ThetaGrid{0.25, 0.25, 2.0, 0.0, 1.5, true};
    fine_cfg.start = ThetaGrid{0.125, 0.125, 2.0, 0.0, 1.5, true};
    RunResult coarse = run_coalescing(cfg);
    RunResult fine = run_coalescing(fine_cfg);
    for (std::size_t s = 0; s < coarse.snapshots.size(); ++s) {
      std::set<std::int64_t> cs(coarse.snapshots[s].sites.begin(),
                                coarse.snapshots[s].sites.end());
      std::set<std::int64_t> fs(fine.snapshots[s].sites.begin(),
                                fine.snapshots[s].sites.end());
      CHECK(std::includes(fs.begin(), fs.end(), cs.begin(), cs.end()));
    }
  }
}

TEST_CASE("walker count is statistically nonincreasing in theta") {
  SimConfig cfg = base_config();
  cfg.retention = Retention::SnapshotsOnly;
  cfg.sample_times = {1.8};
  double coarse = 0.0, fine = 0.0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    cfg.replica = static_cast<std::uint32_t>(rep);
    SimConfig c1 = cfg;
    c1.start = ThetaGrid{0.5, 0.5, 3.0, 0.0, 1.5};
    coarse += static_cast<double>(
        run_coalescing(c1).snapshots[0].sites.size());
    SimConfig c2 = cfg;
    c2.start = ThetaGrid{0.25, 0.25, 3.0, 0.0, 1.5};
    fine += static_cast<double>(run_coalescing(c2).snapshots[0].sites.size());
  }
  CHECK(coarse <= fine);
}

TEST_CASE("a single-level hierarchy reduces to run_coalescing") {
  SimConfig cfg = base_config();
  cfg.horizon = 1.0;
  std::vector<RunResult> runs = run_dyadic_hierarchy({2}, cfg);
  cfg.start = DyadicGrid{2};
  RunResult direct = run_coalescing(cfg);
  REQUIRE(runs.size() == 1);
  REQUIRE(runs[0].events.size() == direct.events.size());
  for (std::size_t i = 0; i < direct.events.size(); ++i) {
    CHECK(runs[0].events[i].time == direct.events[i].time);
    CHECK(runs[0].events[i].absorbed == direct.events[i].absorbed);
  }
}

TEST_CASE("resource and validation errors") {
  SimConfig cfg = base_config();
  cfg.start = FullOccupancy{0.0};
  cfg.max_events = 50;
  CHECK_THROWS_AS(run_coalescing(cfg), ResourceError);

  SimConfig bad = base_config();
  bad.start = ExplicitPoints{{{3.0, 0.0, 0}}};  // born after the horizon
  CHECK_THROWS_AS(run_coalescing(bad), ConfigError);

  SimConfig empty = base_config();
  empty.start = ExplicitPoints{{}};
  CHECK_THROWS_AS(run_coalescing(empty), ConfigError);

  SimConfig mismatch = base_config();
  mismatch.alpha = 1.7;  // law built for 1.5
  CHECK_THROWS_AS(run_coalescing(mismatch), ConfigError);
}

TEST_CASE("wrapping walkers are flagged, never silent") {
  SimConfig cfg = base_config();
  cfg.sites = 8;  // tiny torus forces wraps
  cfg.start = ExplicitPoints{{{0.0, 0.0, 0}}};
  cfg.horizon = 5.0;
  RunResult r = run_coalescing(cfg);
  CHECK(r.wrapped_walkers > 0);
}

TEST_CASE("events-only retention cannot materialize paths") {
  SimConfig cfg = base_config();
  cfg.retention = Retention::EventsOnly;
  cfg.start = ExplicitPoints{{{0.0, 0.0, 0}}};
  RunResult r = run_coalescing(cfg);
  CHECK_THROWS_AS(compute_ages(r), StateError);
}

TEST_CASE("snapshots-only retention recycles slots deterministically") {
  SimConfig cfg = base_config();
  cfg.retention = Retention::SnapshotsOnly;
  cfg.start = ThetaGrid{0.0, 0.25, 2.0, 0.0, 1.5};
  cfg.sample_times = {1.0, 2.0};
  RunResult a = run_coalescing(cfg);
  RunResult b = run_coalescing(cfg);
  REQUIRE(a.snapshots.size() == 2);
  CHECK(a.walkers.empty());
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(a.snapshots[s].sites == b.snapshots[s].sites);
    CHECK(a.snapshots[s].births == b.snapshots[s].births);
  }
  // every lattice site occupied right after a wave
  CHECK(a.snapshots[1].sites.size() <= a.snapshots[0].sites.size());
}

TEST_CASE("age-filtered retention matches full retention after filtering") {
  SimConfig full_cfg = base_config();
  full_cfg.start = ThetaGrid{0.25, 0.25, 2.0, 0.0, 1.0};
  RunResult full = run_coalescing(full_cfg);
  compute_ages(full);

  SimConfig thin_cfg = full_cfg;
  thin_cfg.retention = Retention::AgeFiltered;
  thin_cfg.retention_age = 0.3;
  RunResult thin = run_coalescing(thin_cfg);
  compute_ages(thin);

  PathCollection lhs = operators::filter_age(full.paths, 0.3);
  PathCollection rhs = operators::filter_age(thin.paths, 0.3);
  CHECK(lhs.same_paths(rhs));
}
