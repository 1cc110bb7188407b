#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stableweb/aged_path.hpp"
#include "stableweb/diagnostics.hpp"

namespace stableweb::io {

// NDJSON, one PathRecord per line, canonical order, 17 significant digits
// so doubles round-trip bit for bit. Age anchors are serialized directly;
// the age value after a jump is time - origin.
void write_paths(std::ostream& out, const PathCollection& collection);
std::string paths_to_string(const PathCollection& collection);

// Rejects records with an unknown major version and reports malformed lines
// with their line number. Reads are all-or-nothing; order-insensitive set
// semantics with canonical ordering applied.
PathCollection read_paths(std::istream& in);
PathCollection paths_from_string(const std::string& text);

// CSV with a schema column; one row per (estimator, parameter point).
struct CsvRow {
  std::string estimator;
  std::string params;
  double estimate = 0.0;
  double half_width = 0.0;
};
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

// Structured compactness report.
std::string report_to_json(const diagnostics::CompactnessReport& report);

// Exact decimal formatting used across all writers.
std::string format_double(double v);

}  // namespace stableweb::io
