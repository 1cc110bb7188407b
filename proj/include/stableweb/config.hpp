#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stableweb/engine.hpp"

namespace stableweb::config {

// Everything a reproducible run needs. Serialized as JSON; all fields have
// documented defaults and validated ranges.
struct RunConfig {
  double alpha = 1.5;
  // Negative means "calibrate numerically against the stable law".
  double tail_constant = 0.25;
  bool calibrate = false;
  int x_max = 128;
  double stable_scale = 1.0;
  long long scale_n = 1024;
  long long sites = 1 << 16;
  double horizon = 1.0;
  std::uint64_t seed = 1;
  long long replicas = 1;
  engine::StartSpec start = engine::FullOccupancy{0.0};
  std::vector<double> sample_times;
  engine::Retention retention = engine::Retention::FullPaths;
  double retention_age = 0.0;
  std::uint64_t max_events = 1ull << 31;
  // Optional guard check: the torus must be at least 8x this half-width.
  std::optional<double> analysis_window;
};

struct ParseOutcome {
  RunConfig config;
  std::vector<std::string> errors;  // one entry per violated field
  bool ok() const { return errors.empty(); }
};

// Validates everything and reports all violations with field paths rather
// than stopping at the first.
ParseOutcome parse_config(const std::string& json_text);

// Normalized serialization: defaults filled, keys sorted.
std::string serialize_config(const RunConfig& cfg);

// Engine configuration for one replica (the law is built or calibrated by
// the caller).
engine::SimConfig to_sim_config(const RunConfig& cfg,
                                const sampling::IncrementLaw& law,
                                std::uint32_t replica);

}  // namespace stableweb::config
