#include "stableweb/config.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "stableweb/errors.hpp"

namespace stableweb::config {

using nlohmann::json;

namespace {

const char* kSchema = "stableweb.config/1";

std::string retention_name(engine::Retention r) {
  switch (r) {
    case engine::Retention::FullPaths:
      return "full";
    case engine::Retention::AgeFiltered:
      return "age_filtered";
    case engine::Retention::EventsOnly:
      return "events";
    case engine::Retention::SnapshotsOnly:
      return "snapshots";
  }
  return "full";
}

json start_to_json(const engine::StartSpec& s) {
  json j;
  if (const auto* fo = std::get_if<engine::FullOccupancy>(&s)) {
    j["type"] = "full";
    j["birth_time"] = fo->birth_time;
  } else if (const auto* dy = std::get_if<engine::DyadicGrid>(&s)) {
    j["type"] = "dyadic";
    j["level"] = dy->level;
  } else if (const auto* th = std::get_if<engine::ThetaGrid>(&s)) {
    j["type"] = "theta_grid";
    j["theta_space"] = th->theta_space;
    j["theta_time"] = th->theta_time;
    j["x_half_width"] = th->x_half_width;
    j["t_lo"] = th->t_lo;
    j["t_hi"] = th->t_hi;
    j["dyadic_levels"] = th->dyadic_levels;
    j["time_offset"] = th->time_offset;
  } else {
    const auto& ex = std::get<engine::ExplicitPoints>(s);
    j["type"] = "points";
    json pts = json::array();
    for (const auto& p : ex.points)
      pts.push_back({p.time, p.position, p.level});
    j["points"] = std::move(pts);
  }
  return j;
}

}  // namespace

ParseOutcome parse_config(const std::string& json_text) {
  ParseOutcome out;
  RunConfig& cfg = out.config;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    out.errors.push_back(std::string("json: ") + e.what());
    return out;
  }
  if (!j.is_object()) {
    out.errors.push_back("json: top level must be an object");
    return out;
  }

  auto bad = [&](const std::string& field, const std::string& why) {
    out.errors.push_back(field + ": " + why);
  };
  auto num = [&](const char* field, double lo, double hi, double dflt,
                 bool required = false) {
    if (!j.contains(field)) {
      if (required) bad(field, "missing");
      return dflt;
    }
    if (!j[field].is_number()) {
      bad(field, "must be a number");
      return dflt;
    }
    double v = j[field].get<double>();
    if (v < lo || v > hi) {
      std::ostringstream os;
      os << "out of range [" << lo << ", " << hi << "], got " << v;
      bad(field, os.str());
      return dflt;
    }
    return v;
  };

  if (j.contains("schema") && j["schema"].is_string()) {
    std::string s = j["schema"].get<std::string>();
    if (s.rfind("stableweb.config/", 0) != 0 ||
        s != kSchema)
      bad("schema", "unknown schema '" + s + "'");
  }

  cfg.alpha = num("alpha", std::nextafter(1.0, 2.0), std::nextafter(2.0, 1.0),
                  1.5);
  if (j.contains("tail_constant")) {
    if (j["tail_constant"].is_string()) {
      if (j["tail_constant"].get<std::string>() == "calibrate")
        cfg.calibrate = true;
      else
        bad("tail_constant", "must be a positive number or \"calibrate\"");
    } else {
      cfg.tail_constant = num("tail_constant", 1e-12, 1e6, 0.25);
    }
  }
  cfg.x_max = static_cast<int>(num("x_max", 10, 1 << 20, 128));
  cfg.stable_scale = num("stable_scale", 1e-12, 1e12, 1.0);
  cfg.scale_n = static_cast<long long>(num("scale_n", 2, 1e15, 1024));
  cfg.sites = static_cast<long long>(num("sites", 2, 1e9, 1 << 16));
  cfg.horizon = num("horizon", 1e-12, 1e12, 1.0);
  cfg.seed = static_cast<std::uint64_t>(num("seed", 0, 1.8e19, 1));
  cfg.replicas = static_cast<long long>(num("replicas", 1, 1e9, 1));
  cfg.retention_age = num("retention_age", 0.0, 1e12, 0.0);
  cfg.max_events =
      static_cast<std::uint64_t>(num("max_events", 1, 1.8e19, 1ull << 31));

  if (j.contains("retention")) {
    std::string r = j["retention"].is_string()
                        ? j["retention"].get<std::string>()
                        : std::string();
    if (r == "full")
      cfg.retention = engine::Retention::FullPaths;
    else if (r == "age_filtered")
      cfg.retention = engine::Retention::AgeFiltered;
    else if (r == "events")
      cfg.retention = engine::Retention::EventsOnly;
    else if (r == "snapshots")
      cfg.retention = engine::Retention::SnapshotsOnly;
    else
      bad("retention", "must be full|age_filtered|events|snapshots");
  }

  if (j.contains("sample_times")) {
    if (!j["sample_times"].is_array()) {
      bad("sample_times", "must be an array of times");
    } else {
      for (const auto& t : j["sample_times"]) {
        if (!t.is_number()) {
          bad("sample_times", "must contain numbers only");
          break;
        }
        cfg.sample_times.push_back(t.get<double>());
      }
    }
  }

  if (j.contains("start")) {
    const json& s = j["start"];
    std::string type =
        s.is_object() && s.contains("type") && s["type"].is_string()
            ? s["type"].get<std::string>()
            : std::string();
    if (type == "full") {
      engine::FullOccupancy fo;
      fo.birth_time = s.value("birth_time", 0.0);
      cfg.start = fo;
    } else if (type == "dyadic") {
      engine::DyadicGrid dy;
      dy.level = s.value("level", 0);
      if (dy.level < 0 || dy.level > 40) bad("start.level", "must be in [0, 40]");
      cfg.start = dy;
    } else if (type == "theta_grid") {
      engine::ThetaGrid th;
      th.theta_space = s.value("theta_space", s.value("theta", 0.25));
      th.theta_time = s.value("theta_time", s.value("theta", 0.25));
      th.x_half_width = s.value("x_half_width", 1.0);
      th.t_lo = s.value("t_lo", 0.0);
      th.t_hi = s.value("t_hi", 0.0);
      th.dyadic_levels = s.value("dyadic_levels", false);
      th.time_offset = s.value("time_offset", 0.0);
      if (!(th.theta_time > 0.0)) bad("start.theta_time", "must be positive");
      if (th.theta_space < 0.0) bad("start.theta_space", "must be >= 0");
      if (!(th.t_hi >= th.t_lo)) bad("start.t_hi", "must be >= t_lo");
      cfg.start = th;
    } else if (type == "points") {
      engine::ExplicitPoints ex;
      if (!s.contains("points") || !s["points"].is_array()) {
        bad("start.points", "missing points array");
      } else {
        for (const auto& p : s["points"]) {
          if (!p.is_array() || p.size() < 2) {
            bad("start.points", "each point is [time, position, level?]");
            break;
          }
          engine::ExplicitPoint ep;
          ep.time = p[0].get<double>();
          ep.position = p[1].get<double>();
          ep.level = p.size() > 2 ? p[2].get<int>() : 0;
          ex.points.push_back(ep);
        }
      }
      cfg.start = ex;
    } else {
      bad("start.type", "must be full|dyadic|theta_grid|points");
    }
  }

  if (j.contains("analysis_window")) {
    double w = num("analysis_window", 1e-12, 1e12, 1.0);
    cfg.analysis_window = w;
    double spacing = engine::lattice_spacing(cfg.scale_n, cfg.alpha);
    double half = 0.5 * static_cast<double>(cfg.sites) * spacing;
    if (8.0 * w > half)
      bad("analysis_window",
          "torus half-width must be at least 8x the analysis window");
  }

  // cross-field checks
  if (const auto* th = std::get_if<engine::ThetaGrid>(&cfg.start)) {
    if (th->t_hi > cfg.horizon)
      bad("start.t_hi", "births must not exceed the horizon");
  }
  if (cfg.retention == engine::Retention::AgeFiltered &&
      !(cfg.retention_age > 0.0))
    bad("retention_age", "required for age_filtered retention");

  return out;
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["schema"] = kSchema;
  j["alpha"] = cfg.alpha;
  if (cfg.calibrate)
    j["tail_constant"] = "calibrate";
  else
    j["tail_constant"] = cfg.tail_constant;
  j["x_max"] = cfg.x_max;
  j["stable_scale"] = cfg.stable_scale;
  j["scale_n"] = cfg.scale_n;
  j["sites"] = cfg.sites;
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  j["retention"] = retention_name(cfg.retention);
  j["retention_age"] = cfg.retention_age;
  j["max_events"] = cfg.max_events;
  j["sample_times"] = cfg.sample_times;
  j["start"] = start_to_json(cfg.start);
  if (cfg.analysis_window) j["analysis_window"] = *cfg.analysis_window;
  return j.dump(2) + "\n";
}

engine::SimConfig to_sim_config(const RunConfig& cfg,
                                const sampling::IncrementLaw& law,
                                std::uint32_t replica) {
  engine::SimConfig sim;
  sim.law = law;
  sim.alpha = cfg.alpha;
  sim.scale_n = cfg.scale_n;
  sim.sites = cfg.sites;
  sim.horizon = cfg.horizon;
  sim.seed = cfg.seed;
  sim.replica = replica;
  sim.start = cfg.start;
  sim.sample_times = cfg.sample_times;
  sim.retention = cfg.retention;
  sim.retention_age = cfg.retention_age;
  sim.max_events = cfg.max_events;
  return sim;
}

}  // namespace stableweb::config
