#include "stableweb/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "stableweb/errors.hpp"

namespace stableweb::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_one(std::ostream& out, const AgedPath& p) {
  out << "{\"v\":1,\"birth\":" << format_double(p.birth)
      << ",\"x0\":" << format_double(p.initial_value)
      << ",\"age_origin\":" << format_double(p.age_origin)
      << ",\"horizon\":" << format_double(p.horizon) << ",\"jumps\":[";
  for (std::size_t i = 0; i < p.jumps.size(); ++i) {
    if (i) out << ',';
    out << '[' << format_double(p.jumps[i].time) << ','
        << format_double(p.jumps[i].value) << ']';
  }
  out << "],\"age_anchors\":[";
  for (std::size_t i = 0; i < p.age_jumps.size(); ++i) {
    if (i) out << ',';
    out << '[' << format_double(p.age_jumps[i].time) << ','
        << format_double(p.age_jumps[i].origin) << ']';
  }
  out << "],\"replica\":" << p.replica << ",\"walker\":" << p.walker << "}\n";
}

}  // namespace

void write_paths(std::ostream& out, const PathCollection& collection) {
  PathCollection sorted = collection;
  sorted.canonicalize();
  for (const AgedPath& p : sorted.paths) write_one(out, p);
}

std::string paths_to_string(const PathCollection& collection) {
  std::ostringstream os;
  write_paths(os, collection);
  return os.str();
}

PathCollection read_paths(std::istream& in) {
  PathCollection out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError("paths line " + std::to_string(lineno) + ": " +
                        e.what());
    }
    auto fail = [&](const std::string& why) -> ConfigError {
      return ConfigError("paths line " + std::to_string(lineno) + ": " + why);
    };
    if (!j.is_object()) throw fail("record must be an object");
    if (j.value("v", -1) != 1) throw fail("unknown record version");
    AgedPath p;
    try {
      p.birth = j.at("birth").get<double>();
      p.initial_value = j.at("x0").get<double>();
      p.age_origin = j.at("age_origin").get<double>();
      p.horizon = j.at("horizon").get<double>();
      for (const auto& e : j.at("jumps"))
        p.jumps.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
      for (const auto& e : j.at("age_anchors"))
        p.age_jumps.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
      p.replica = j.value("replica", 0u);
      p.walker = j.value("walker", 0u);
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
    double prev = p.birth;
    for (const Jump& q : p.jumps) {
      if (q.time < prev) throw fail("jump times must be nondecreasing");
      prev = q.time;
    }
    prev = p.birth;
    for (const AgeJump& q : p.age_jumps) {
      if (q.time < prev) throw fail("age jump times must be nondecreasing");
      prev = q.time;
    }
    out.paths.push_back(std::move(p));
  }
  out.canonicalize();
  return out;
}

PathCollection paths_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_paths(is);
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << "schema,estimator,params,estimate,half_width\n";
  for (const CsvRow& r : rows)
    out << "stableweb.estimates/1," << r.estimator << ',' << r.params << ','
        << format_double(r.estimate) << ',' << format_double(r.half_width)
        << '\n';
}

std::string report_to_json(const diagnostics::CompactnessReport& report) {
  json j;
  j["schema"] = "stableweb.compactness/1";
  j["pass"] = report.pass;
  json arr = json::array();
  for (const auto& c : report.conditions) {
    json e;
    e["level"] = c.level;
    e["condition"] = c.condition;
    e["pass"] = c.pass;
    if (!c.pass) e["witness"] = c.witness;
    arr.push_back(std::move(e));
  }
  j["conditions"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace stableweb::io
