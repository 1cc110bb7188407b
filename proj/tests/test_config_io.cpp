#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stableweb/config.hpp"
#include "stableweb/errors.hpp"
#include "stableweb/io.hpp"
#include "stableweb/rng.hpp"

using namespace stableweb;

TEST_CASE("parse_config fills defaults for a minimal document") {
  auto out = config::parse_config(R"({"alpha": 1.5})");
  REQUIRE(out.ok());
  CHECK(out.config.alpha == 1.5);
  CHECK(out.config.scale_n == 1024);
  CHECK(out.config.replicas == 1);
  CHECK(out.config.x_max == 128);
  CHECK(std::holds_alternative<engine::FullOccupancy>(out.config.start));
}

TEST_CASE("parse_config reports violations with field paths, not fail-fast") {
  auto out = config::parse_config(
      R"({"alpha": 2.3, "scale_n": 0, "retention": "bogus"})");
  CHECK(!out.ok());
  CHECK(out.errors.size() >= 3);
  bool alpha_named = false;
  for (const std::string& e : out.errors)
    if (e.find("alpha") == 0 && e.find("range") != std::string::npos)
      alpha_named = true;
  CHECK(alpha_named);
}

TEST_CASE("serialize(parse(x)) is idempotent after one normalization") {
  RngStream rng(22, 0);
  for (int trial = 0; trial < 40; ++trial) {
    std::ostringstream doc;
    doc << R"({"alpha": )" << 1.1 + 0.8 * rng.next_double()
        << R"(, "scale_n": )" << (1 + rng.next_u64() % 4096)
        << R"(, "horizon": )" << 0.5 + rng.next_double()
        << R"(, "seed": )" << rng.next_u64() % 100000
        << R"(, "start": {"type": "theta_grid", "theta": 0.25, "x_half_width": 1.0, "t_hi": 0.25}})";
    auto first = config::parse_config(doc.str());
    REQUIRE(first.ok());
    std::string norm = config::serialize_config(first.config);
    auto second = config::parse_config(norm);
    REQUIRE(second.ok());
    CHECK(config::serialize_config(second.config) == norm);
  }
}

namespace {

PathCollection random_collection(int n, RngStream& rng) {
  PathCollection c;
  for (int i = 0; i < n; ++i) {
    AgedPath p;
    p.birth = -3.0 + 6.0 * rng.next_double();
    p.initial_value = -10.0 + 20.0 * rng.next_double();
    p.age_origin = p.birth - rng.next_double();
    p.horizon = p.birth + 0.1 + 4.0 * rng.next_double();
    p.replica = static_cast<std::uint32_t>(rng.next_u64() % 16);
    p.walker = static_cast<std::uint32_t>(i);
    int nj = static_cast<int>(rng.next_u64() % 3);
    double t = p.birth;
    for (int k = 0; k < nj; ++k) {
      t += (p.horizon - t) * rng.next_double();
      p.jumps.push_back({t, -10.0 + 20.0 * rng.next_double()});
    }
    c.paths.push_back(std::move(p));
  }
  c.canonicalize();
  return c;
}

}  // namespace

TEST_CASE("path records round-trip losslessly") {
  RngStream rng(7331, 1);
  PathCollection c = random_collection(500, rng);
  std::string text = io::paths_to_string(c);
  PathCollection back = io::paths_from_string(text);
  CHECK(back.same_paths(c));
  // write . read is the identity on canonical files
  CHECK(io::paths_to_string(back) == text);
}

TEST_CASE("a shuffled-line file reads to the same collection") {
  RngStream rng(7332, 2);
  PathCollection c = random_collection(64, rng);
  std::string text = io::paths_to_string(c);
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  // deterministic shuffle
  for (std::size_t i = lines.size(); i > 1; --i)
    std::swap(lines[i - 1], lines[rng.next_u64() % i]);
  std::string shuffled;
  for (const std::string& l : lines) shuffled += l + "\n";
  CHECK(io::paths_from_string(shuffled).same_paths(c));
}

TEST_CASE("a large generated corpus round-trips every floating field") {
  RngStream rng(7333, 3);
  PathCollection c = random_collection(100000, rng);
  PathCollection back = io::paths_from_string(io::paths_to_string(c));
  REQUIRE(back.paths.size() == c.paths.size());
  for (std::size_t i = 0; i < c.paths.size(); ++i)
    CHECK(back.paths[i].same_triple(c.paths[i]));
}

TEST_CASE("malformed lines are reported with their line number") {
  std::string text =
      R"({"v":1,"birth":0,"x0":0,"age_origin":0,"horizon":1,"jumps":[],"age_anchors":[],"replica":0,"walker":0})"
      "\nnot json at all\n";
  CHECK_THROWS_WITH_AS(io::paths_from_string(text),
                       doctest::Contains("line 2"), ConfigError);

  std::string bad_version =
      R"({"v":9,"birth":0,"x0":0,"age_origin":0,"horizon":1,"jumps":[],"age_anchors":[],"replica":0,"walker":0})"
      "\n";
  CHECK_THROWS_AS(io::paths_from_string(bad_version), ConfigError);
}
