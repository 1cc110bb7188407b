#include "stableweb/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <queue>
#include <string>
#include <tuple>

#include "stableweb/errors.hpp"
#include "stableweb/rng.hpp"

namespace stableweb::engine {

double lattice_spacing(std::int64_t scale_n, double alpha) {
  double e = std::log2(static_cast<double>(scale_n)) / alpha;
  double er = std::round(e);
  if (std::abs(e - er) < 1e-9)
    return std::ldexp(1.0, -static_cast<int>(er));
  return std::pow(static_cast<double>(scale_n), -1.0 / alpha);
}

namespace {

constexpr std::int32_t kEmpty = -1;

std::uint64_t walker_stream_key(std::uint32_t replica, std::int64_t site,
                                double birth_time) {
  std::uint64_t t;
  std::memcpy(&t, &birth_time, sizeof t);
  std::uint64_t h = RngStream::mix(0x9e3779b97f4a7c15ull + replica);
  h = RngStream::mix(h ^ t);
  return RngStream::mix(h + static_cast<std::uint64_t>(site) * 0xd1342543de82ef95ull);
}

struct HeapEntry {
  double time;
  std::uint32_t slot;
  std::uint64_t seq;
};

struct HeapLater {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    return std::tie(a.time, a.slot, a.seq) > std::tie(b.time, b.slot, b.seq);
  }
};

struct StartSite {
  std::int64_t site;
  std::int32_t level;
};

struct WaveRef {
  double time;
  std::size_t list;
  std::int32_t time_level;
  bool operator<(const WaveRef& o) const {
    return std::tie(time, list, time_level) < std::tie(o.time, o.list, o.time_level);
  }
};

struct Waves {
  std::vector<WaveRef> times;
  std::vector<std::vector<StartSite>> lists;
};

// Level of index i within the dyadic refinement family at depth k: the
// coarsest grid 2^-m Z containing i 2^-k.
std::int32_t dyadic_index_level(std::int64_t i, std::int32_t k) {
  if (i == 0 || k <= 0) return 0;
  std::uint64_t u = static_cast<std::uint64_t>(i < 0 ? -i : i);
  std::int32_t z = std::countr_zero(u);
  return k - std::min(k, z);
}

Waves expand_start(const SimConfig& cfg, double spacing) {
  Waves w;
  const std::int64_t M = cfg.sites;
  const double half = 0.5 * static_cast<double>(M) * spacing;

  if (const auto* fo = std::get_if<FullOccupancy>(&cfg.start)) {
    std::vector<StartSite> all;
    all.reserve(static_cast<std::size_t>(M));
    for (std::int64_t s = -M / 2; s < M - M / 2; ++s) all.push_back({s, 0});
    w.lists.push_back(std::move(all));
    w.times.push_back({fo->birth_time, 0, 0});
  } else if (const auto* dy = std::get_if<DyadicGrid>(&cfg.start)) {
    if (dy->level < 0) throw ConfigError("DyadicGrid: level must be >= 0");
    double step = std::ldexp(1.0, -dy->level);
    std::vector<StartSite> pts;
    std::int64_t i_lo = static_cast<std::int64_t>(std::ceil(-half / step));
    std::int64_t i_hi = static_cast<std::int64_t>(std::ceil(half / step)) - 1;
    for (std::int64_t i = i_lo; i <= i_hi; ++i) {
      double x = static_cast<double>(i) * step;
      std::int64_t site = site_of_position(x, spacing);
      if (site < -M / 2 || site >= M - M / 2) continue;
      std::int32_t lvl = dyadic_index_level(i, dy->level);
      if (!pts.empty() && pts.back().site == site) {
        pts.back().level = std::min(pts.back().level, lvl);
      } else {
        pts.push_back({site, lvl});
      }
    }
    w.lists.push_back(std::move(pts));
    w.times.push_back({0.0, 0, 0});
  } else if (const auto* th = std::get_if<ThetaGrid>(&cfg.start)) {
    if (!(th->theta_time > 0.0))
      throw ConfigError("ThetaGrid: theta_time must be positive");
    if (th->x_half_width > half * (1.0 + 1e-12))
      throw ConfigError("ThetaGrid: window exceeds the torus");
    std::int32_t depth = 0;
    if (th->dyadic_levels) {
      if (th->theta_space != th->theta_time)
        throw ConfigError("ThetaGrid: dyadic levels need a square grid");
      double k = -std::log2(th->theta_time);
      depth = static_cast<std::int32_t>(std::lround(k));
      if (depth < 0) depth = 0;
      if (std::abs(th->theta_time * std::ldexp(1.0, depth) - 1.0) > 1e-12)
        throw ConfigError("ThetaGrid: dyadic levels need theta a power of two");
    }
    std::vector<StartSite> pts;
    if (th->theta_space <= spacing * (1.0 + 1e-12) && !th->dyadic_levels) {
      std::int64_t lo = static_cast<std::int64_t>(
          std::ceil(-th->x_half_width / spacing - 1e-9));
      std::int64_t hi = static_cast<std::int64_t>(
          std::floor(th->x_half_width / spacing + 1e-9));
      for (std::int64_t s = lo; s <= hi; ++s) pts.push_back({s, 0});
    } else {
      double step = th->theta_space / spacing;
      std::int64_t k_lo = static_cast<std::int64_t>(
          std::ceil(-th->x_half_width / th->theta_space - 1e-9));
      std::int64_t k_hi = static_cast<std::int64_t>(
          std::floor(th->x_half_width / th->theta_space + 1e-9));
      bool exact = std::abs(step - std::round(step)) < 1e-9;
      std::int64_t istep = static_cast<std::int64_t>(std::round(step));
      for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        std::int64_t site =
            exact ? k * istep
                  : std::llround(static_cast<double>(k) * step);
        std::int32_t lvl = th->dyadic_levels ? dyadic_index_level(k, depth) : 0;
        if (!pts.empty() && pts.back().site == site) {
          pts.back().level = std::min(pts.back().level, lvl);
          continue;
        }
        pts.push_back({site, lvl});
      }
    }
    w.lists.push_back(std::move(pts));
    std::int64_t j_lo = static_cast<std::int64_t>(
        std::ceil((th->t_lo - th->time_offset) / th->theta_time - 1e-9));
    std::int64_t j_hi = static_cast<std::int64_t>(
        std::floor((th->t_hi - th->time_offset) / th->theta_time + 1e-9));
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      std::int32_t tl = th->dyadic_levels ? dyadic_index_level(j, depth) : 0;
      w.times.push_back(
          {static_cast<double>(j) * th->theta_time + th->time_offset, 0, tl});
    }
  } else {
    const auto& ex = std::get<ExplicitPoints>(cfg.start);
    std::vector<ExplicitPoint> pts = ex.points;
    std::stable_sort(pts.begin(), pts.end(),
                     [](const ExplicitPoint& a, const ExplicitPoint& b) {
                       return std::tie(a.time, a.position) <
                              std::tie(b.time, b.position);
                     });
    std::size_t i = 0;
    while (i < pts.size()) {
      std::size_t j = i;
      std::vector<StartSite> list;
      while (j < pts.size() && pts[j].time == pts[i].time) {
        list.push_back({site_of_position(pts[j].position, spacing), pts[j].level});
        ++j;
      }
      w.times.push_back({pts[i].time, w.lists.size(), 0});
      w.lists.push_back(std::move(list));
      i = j;
    }
  }

  std::sort(w.times.begin(), w.times.end());
  if (w.times.empty())
    throw ConfigError("run_coalescing: empty starting set");
  if (w.times.back().time > cfg.horizon)
    throw ConfigError("run_coalescing: horizon must cover all birth times");
  return w;
}

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : cfg_(cfg),
        spacing_(lattice_spacing(cfg.scale_n, cfg.alpha)),
        jump_rate_(static_cast<double>(cfg.scale_n) * (1.0 - cfg.law.p_zero)),
        occupancy_(static_cast<std::size_t>(cfg.sites), kEmpty) {
    if (cfg.sites < 2) throw ConfigError("SimConfig: need at least 2 sites");
    if (std::abs(cfg.alpha - cfg.law.alpha) > 1e-12)
      throw ConfigError("SimConfig: alpha differs from the increment law");
    records_ = cfg.retention != Retention::SnapshotsOnly;
    trajectories_ = cfg.retention == Retention::FullPaths ||
                    cfg.retention == Retention::AgeFiltered;
  }

  RunResult run() {
    Waves waves = expand_start(cfg_, spacing_);
    RunResult out;
    out.spacing = spacing_;
    out.sites = cfg_.sites;
    out.horizon = cfg_.horizon;
    out.replica = cfg_.replica;
    out.retention = cfg_.retention;
    out.retention_age = cfg_.retention_age;

    std::vector<double> samples = cfg_.sample_times;
    std::sort(samples.begin(), samples.end());
    std::size_t next_sample = 0;
    std::size_t next_wave = 0;
    bool done = false;

    while (!done) {
      double t_wave = next_wave < waves.times.size()
                          ? waves.times[next_wave].time
                          : kNever;
      skip_stale();
      double t_jump = heap_.empty() ? kNever : heap_.top().time;
      double t_next = std::min(t_wave, t_jump);

      while (next_sample < samples.size() &&
             (samples[next_sample] < t_next || t_next > cfg_.horizon)) {
        if (samples[next_sample] > cfg_.horizon) {
          next_sample = samples.size();
          break;
        }
        record_snapshot(out, samples[next_sample]);
        ++next_sample;
      }

      if (t_next > cfg_.horizon) break;
      if (t_wave <= t_jump) {
        const WaveRef& wv = waves.times[next_wave];
        for (const StartSite& s : waves.lists[wv.list])
          spawn(out, t_wave, s.site, std::max(s.level, wv.time_level));
        ++next_wave;
      } else {
        HeapEntry e = heap_.top();
        heap_.pop();
        done = process_jump(out, e);
      }
      if (cfg_.stop_when_single && born_ >= 2 && live_ <= 1) done = true;
    }

    out.total_jumps = jumps_;
    out.live_walkers = live_;
    out.born_walkers = born_;
    out.wrapped_walkers = wrapped_count_;
    if (records_) {
      for (std::uint32_t w = 0; w < walkers_.size(); ++w)
        walkers_[w].final_site = cur_site_[w];
      out.walkers = std::move(walkers_);
      out.events = std::move(events_);
      out.own_jumps = std::move(own_jumps_);
      out.own_age_jumps = std::move(own_age_jumps_);
    }
    return out;
  }

 private:
  std::size_t idx(std::int64_t site) const {
    std::int64_t m = site % cfg_.sites;
    if (m < 0) m += cfg_.sites;
    return static_cast<std::size_t>(m);
  }

  OriginRank rank_of(std::uint32_t w) const {
    return OriginRank{level_[w], birth_time_[w], birth_site_[w]};
  }

  void skip_stale() {
    while (!heap_.empty()) {
      const HeapEntry& e = heap_.top();
      if (alive_[e.slot] && seq_[e.slot] == e.seq) return;
      heap_.pop();
    }
  }

  std::uint32_t alloc_slot() {
    if (!free_.empty()) {
      std::uint32_t s = free_.back();
      free_.pop_back();
      return s;
    }
    std::uint32_t s = static_cast<std::uint32_t>(alive_.size());
    alive_.push_back(false);
    seq_.push_back(0);
    cur_site_.push_back(0);
    birth_time_.push_back(0.0);
    birth_site_.push_back(0);
    level_.push_back(0);
    wrapped_.push_back(false);
    cluster_origin_.push_back(0.0);
    streams_.emplace_back();
    return s;
  }

  void schedule(std::uint32_t w, double t) {
    double dt = streams_[w].next_exp(jump_rate_);
    ++seq_[w];
    heap_.push({t + dt, w, seq_[w]});
  }

  void absorb(RunResult&, std::uint32_t loser, std::uint32_t winner, double t) {
    alive_[loser] = false;
    --live_;
    double merged = std::min(cluster_origin_[loser], cluster_origin_[winner]);
    if (records_) {
      if (merged < cluster_origin_[loser])
        own_age_jumps_[loser].push_back({t, merged});
      if (merged < cluster_origin_[winner])
        own_age_jumps_[winner].push_back({t, merged});
      has_absorbed_[winner] = true;
      walkers_[loser].absorbed_time = t;
      walkers_[loser].absorbed_by = winner;
      walkers_[loser].final_site = cur_site_[loser];
      events_.push_back({t, loser, winner});
      if (cfg_.retention == Retention::AgeFiltered &&
          t - birth_time_[loser] < cfg_.retention_age && !has_absorbed_[loser]) {
        std::vector<SiteJump>().swap(own_jumps_[loser]);
        std::vector<OriginJump>().swap(own_age_jumps_[loser]);
        segments_kept_[loser] = false;
      }
    } else {
      free_.push_back(loser);
    }
    cluster_origin_[winner] = merged;
  }

  void spawn(RunResult& out, double t, std::int64_t site, std::int32_t lvl) {
    std::uint32_t w = alloc_slot();
    alive_[w] = true;
    cur_site_[w] = site;
    birth_time_[w] = t;
    birth_site_[w] = site;
    level_[w] = lvl;
    wrapped_[w] = false;
    cluster_origin_[w] = t;
    streams_[w] = RngStream(cfg_.seed, walker_stream_key(cfg_.replica, site, t));
    ++born_;
    ++live_;
    if (records_) {
      if (w >= walkers_.size()) {
        walkers_.resize(w + 1);
        own_jumps_.resize(w + 1);
        own_age_jumps_.resize(w + 1);
        segments_kept_.resize(w + 1, false);
        has_absorbed_.resize(w + 1, false);
      }
      walkers_[w] = WalkerInfo{t, site, site, lvl, kNever, 0, false};
      own_jumps_[w].clear();
      own_age_jumps_[w].clear();
      segments_kept_[w] = trajectories_;
      has_absorbed_[w] = false;
    }

    std::int32_t occ = occupancy_[idx(site)];
    if (occ != kEmpty && static_cast<std::uint32_t>(occ) != w) {
      std::uint32_t o = static_cast<std::uint32_t>(occ);
      bool newborn_wins = rank_less(rank_of(w), rank_of(o)) ||
                          (!rank_less(rank_of(o), rank_of(w)) && w < o);
      if (newborn_wins) {
        absorb(out, o, w, t);
        occupancy_[idx(site)] = static_cast<std::int32_t>(w);
        schedule(w, t);
      } else {
        absorb(out, w, o, t);
      }
    } else {
      occupancy_[idx(site)] = static_cast<std::int32_t>(w);
      schedule(w, t);
    }
  }

  bool process_jump(RunResult& out, const HeapEntry& e) {
    std::uint32_t w = e.slot;
    double t = e.time;
    ++jumps_;
    if (jumps_ > cfg_.max_events)
      throw ResourceError("run_coalescing: event cap of " +
                          std::to_string(cfg_.max_events) + " exceeded");

    long long step = sampling::sample_increment_nonzero(cfg_.law, streams_[w]);
    std::int64_t ns = cur_site_[w] + step;
    if (trajectories_ && segments_kept_[w]) own_jumps_[w].push_back({t, ns});
    if ((ns > cfg_.sites / 2 || ns < -cfg_.sites / 2) && !wrapped_[w]) {
      wrapped_[w] = true;
      ++wrapped_count_;
      if (records_) walkers_[w].wrapped = true;
    }

    occupancy_[idx(cur_site_[w])] = kEmpty;
    std::int32_t occ = occupancy_[idx(ns)];
    cur_site_[w] = ns;
    if (occ != kEmpty && static_cast<std::uint32_t>(occ) != w) {
      std::uint32_t o = static_cast<std::uint32_t>(occ);
      if (rank_less(rank_of(w), rank_of(o)) ||
          (!rank_less(rank_of(o), rank_of(w)) && w < o)) {
        absorb(out, o, w, t);
        occupancy_[idx(ns)] = static_cast<std::int32_t>(w);
        schedule(w, t);
      } else {
        absorb(out, w, o, t);
      }
    } else {
      occupancy_[idx(ns)] = static_cast<std::int32_t>(w);
      schedule(w, t);
    }
    return false;
  }

  void record_snapshot(RunResult& out, double t) {
    Snapshot snap;
    snap.time = t;
    std::vector<std::pair<std::int64_t, double>> rows;
    for (std::int32_t slot : occupancy_) {
      if (slot == kEmpty) continue;
      std::uint32_t w = static_cast<std::uint32_t>(slot);
      rows.emplace_back(cur_site_[w], birth_time_[w]);
    }
    std::sort(rows.begin(), rows.end());
    snap.sites.reserve(rows.size());
    snap.births.reserve(rows.size());
    for (const auto& [s, b] : rows) {
      snap.sites.push_back(s);
      snap.births.push_back(b);
    }
    out.snapshots.push_back(std::move(snap));
  }

  const SimConfig& cfg_;
  double spacing_;
  double jump_rate_;
  bool records_ = true;
  bool trajectories_ = true;

  std::vector<std::int32_t> occupancy_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLater> heap_;

  // per-slot state
  std::vector<bool> alive_;
  std::vector<std::uint64_t> seq_;
  std::vector<std::int64_t> cur_site_;
  std::vector<double> birth_time_;
  std::vector<std::int64_t> birth_site_;
  std::vector<std::int32_t> level_;
  std::vector<bool> wrapped_;
  std::vector<double> cluster_origin_;
  std::vector<RngStream> streams_;
  std::vector<std::uint32_t> free_;

  // permanent records
  std::vector<WalkerInfo> walkers_;
  std::vector<CoalescenceEvent> events_;
  std::vector<std::vector<SiteJump>> own_jumps_;
  std::vector<std::vector<OriginJump>> own_age_jumps_;
  std::vector<bool> segments_kept_;
  std::vector<bool> has_absorbed_;

  std::uint64_t jumps_ = 0;
  std::uint64_t born_ = 0;
  std::uint64_t live_ = 0;
  std::uint64_t wrapped_count_ = 0;
};

}  // namespace

RunResult run_coalescing(const SimConfig& config) {
  Simulator sim(config);
  return sim.run();
}

void compute_ages(RunResult& result) {
  if (!result.paths.paths.empty()) return;
  if (result.retention != Retention::FullPaths &&
      result.retention != Retention::AgeFiltered)
    throw StateError("compute_ages: trajectories were not retained");

  // event log consistency
  for (const CoalescenceEvent& e : result.events) {
    if (e.absorbed >= result.walkers.size() ||
        e.survivor >= result.walkers.size())
      throw StateError("compute_ages: event references unknown walker");
    const WalkerInfo& a = result.walkers[e.absorbed];
    const WalkerInfo& s = result.walkers[e.survivor];
    if (a.absorbed_time != e.time || a.absorbed_by != e.survivor)
      throw StateError("compute_ages: event log disagrees with walker state");
    if (!(s.absorbed_time > e.time))
      throw StateError("compute_ages: absorbed walker has later events");
    if (e.absorbed < result.own_jumps.size())
      for (const SiteJump& j : result.own_jumps[e.absorbed])
        if (j.time > e.time)
          throw StateError("compute_ages: absorbed walker has later events");
  }

  const double spacing = result.spacing;
  for (std::uint32_t w = 0; w < result.walkers.size(); ++w) {
    const WalkerInfo& wi = result.walkers[w];
    if (result.retention == Retention::AgeFiltered) {
      double lifespan = std::min(wi.absorbed_time, result.horizon) - wi.birth_time;
      if (lifespan < result.retention_age) continue;
    }
    AgedPath p;
    p.birth = wi.birth_time;
    p.initial_value = site_position(wi.birth_site, spacing);
    p.age_origin = wi.birth_time;
    p.horizon = result.horizon;
    p.replica = result.replica;
    p.walker = w;

    double seg_from = wi.birth_time;
    double origin = wi.birth_time;
    std::uint32_t cur = w;
    bool first = true;
    while (true) {
      const WalkerInfo& ci = result.walkers[cur];
      double seg_to = std::min(ci.absorbed_time, result.horizon);
      for (const SiteJump& j : result.own_jumps[cur]) {
        if (j.time <= seg_from || j.time > seg_to) continue;
        p.jumps.push_back({j.time, site_position(j.site, spacing)});
      }
      for (const OriginJump& j : result.own_age_jumps[cur]) {
        bool in_range = first ? (j.time >= seg_from && j.time <= seg_to)
                              : (j.time > seg_from && j.time <= seg_to);
        if (!in_range || j.origin >= origin) continue;
        p.age_jumps.push_back({j.time, j.origin});
        origin = j.origin;
      }
      if (ci.absorbed_time > result.horizon) break;
      seg_from = ci.absorbed_time;
      cur = ci.absorbed_by;
      first = false;
    }
    result.paths.paths.push_back(std::move(p));
  }
  result.paths.canonicalize();
}

std::vector<RunResult> run_dyadic_hierarchy(const std::vector<int>& levels,
                                            SimConfig base) {
  if (levels.empty()) throw ConfigError("run_dyadic_hierarchy: no levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw ConfigError("run_dyadic_hierarchy: levels must increase");
  std::vector<RunResult> out;
  out.reserve(levels.size());
  for (int lvl : levels) {
    base.start = DyadicGrid{lvl};
    out.push_back(run_coalescing(base));
  }
  return out;
}

RunResult run_theta_grid(double theta, double x_half_width, double t_lo,
                         double t_hi, SimConfig base) {
  if (!(theta > 0.0)) throw ConfigError("run_theta_grid: theta must be positive");
  base.start = ThetaGrid{theta, theta, x_half_width, t_lo, t_hi};
  return run_coalescing(base);
}

}  // namespace stableweb::engine
