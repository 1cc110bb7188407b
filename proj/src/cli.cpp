#include "stableweb/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stableweb/config.hpp"
#include "stableweb/errors.hpp"
#include "stableweb/experiments.hpp"
#include "stableweb/io.hpp"
#include "stableweb/operators.hpp"

namespace stableweb::cli {

namespace {

namespace fs = std::filesystem;

class AssertionFailure : public std::runtime_error {
 public:
  explicit AssertionFailure(const std::string& what)
      : std::runtime_error(what) {}
};

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  long long replicas = 0;
  int threads = 1;
  std::string assertion;
};

config::RunConfig load_config(const Common& c) {
  if (c.config_path.empty()) throw ConfigError("--config is required");
  std::ifstream in(c.config_path);
  if (!in) throw ConfigError("cannot open config " + c.config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  config::ParseOutcome parsed = config::parse_config(buf.str());
  if (!parsed.ok()) {
    std::string all = "invalid config:";
    for (const std::string& e : parsed.errors) all += "\n  " + e;
    throw ConfigError(all);
  }
  config::RunConfig cfg = parsed.config;
  if (c.seed_set) cfg.seed = c.seed;
  if (c.replicas > 0) cfg.replicas = c.replicas;
  return cfg;
}

fs::path ensure_outdir(const Common& c) {
  std::string dir = c.out_dir;
  if (const char* env = std::getenv("STABLEWEB_OUT")) dir = env;
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::map<std::string, double> parse_assertion(const std::string& expr) {
  std::map<std::string, double> kv;
  std::stringstream ss(expr);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--assert items must look like key=value: " + item);
    kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return kv;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

PathCollection read_collection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open paths file " + path);
  return io::read_paths(in);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_simulate(const Common& c) {
  config::RunConfig cfg = load_config(c);
  sampling::IncrementLaw law = experiments::law_for(cfg);
  auto runs = experiments::run_replicas(cfg, law, c.threads);
  fs::path dir = ensure_outdir(c);

  nlohmann::json summary;
  summary["schema"] = "stableweb.summary/1";
  nlohmann::json reps = nlohmann::json::array();
  std::ostringstream paths;
  bool emit_paths = cfg.retention == engine::Retention::FullPaths ||
                    cfg.retention == engine::Retention::AgeFiltered;
  for (engine::RunResult& r : runs) {
    if (emit_paths) {
      engine::compute_ages(r);
      io::write_paths(paths, r.paths);
    }
    nlohmann::json jr;
    jr["replica"] = r.replica;
    jr["born"] = r.born_walkers;
    jr["live"] = r.live_walkers;
    jr["events"] = r.events.size();
    jr["jumps"] = r.total_jumps;
    jr["wrapped"] = r.wrapped_walkers;
    reps.push_back(std::move(jr));
  }
  summary["replicas"] = std::move(reps);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (emit_paths) write_file(dir / "paths.ndjson", paths.str());
  std::cout << "simulate: " << runs.size() << " replicas -> " << dir << "\n";
  return 0;
}

int run_filter(const Common& c, const std::string& input, double delta,
               int level, bool project_mode) {
  PathCollection in = read_collection(input);
  PathCollection out =
      project_mode ? operators::project(in, level)
                   : operators::filter_age(in, delta);
  fs::path dir = ensure_outdir(c);
  fs::path file = dir / (project_mode ? "projected.ndjson" : "filtered.ndjson");
  std::ofstream os(file, std::ios::binary);
  io::write_paths(os, out);
  std::cout << (project_mode ? "project" : "filter") << ": " << in.paths.size()
            << " -> " << out.paths.size() << " paths\n";
  return 0;
}

int run_metric(const Common& c, const std::string& a, const std::string& b,
               bool hausdorff_mode) {
  PathCollection ca = read_collection(a);
  PathCollection cb = read_collection(b);
  metrics::MetricOptions mopts;
  std::vector<io::CsvRow> rows;
  if (hausdorff_mode) {
    double h = metrics::hausdorff(ca, cb, mopts);
    rows.push_back({"hausdorff", "rho", h, 0.0});
    std::cout << "hausdorff = " << io::format_double(h) << "\n";
  } else {
    if (ca.paths.empty() || cb.paths.empty())
      throw ConfigError("metric: both files must contain at least one path");
    const AgedPath& p = ca.paths.front();
    const AgedPath& q = cb.paths.front();
    double d = metrics::metric_d(p, q, mopts);
    double d1 = metrics::metric_d1(p, q, mopts);
    double rho = metrics::metric_rho(p, q, mopts);
    rows.push_back({"metric_d", "pair", d, 0.0});
    rows.push_back({"metric_d1", "pair", d1, 0.0});
    rows.push_back({"metric_rho", "pair", rho, std::ldexp(1.0, -mopts.rho_terms)});
    std::cout << "d = " << io::format_double(d)
              << "\nd1 = " << io::format_double(d1)
              << "\nrho = " << io::format_double(rho) << "\n";
  }
  std::ostringstream os;
  io::write_csv(os, rows);
  write_file(ensure_outdir(c) / "metrics.csv", os.str());
  return 0;
}

int run_density(const Common& c, double window) {
  config::RunConfig cfg = load_config(c);
  if (cfg.sample_times.empty())
    throw ConfigError("density: config.sample_times must list the times");
  sampling::IncrementLaw law = experiments::law_for(cfg);
  auto runs = experiments::run_replicas(cfg, law, c.threads);
  experiments::DensityTable table =
      experiments::density_experiment(runs, cfg.sample_times, window);

  std::vector<io::CsvRow> rows;
  for (const auto& e : table.rows)
    rows.push_back({"density", "t=" + io::format_double(e.time), e.density,
                    e.std_error});
  rows.push_back({"density_slope", "loglog", table.fit.slope, 0.0});
  std::ostringstream os;
  io::write_csv(os, rows);
  write_file(ensure_outdir(c) / "density.csv", os.str());
  std::cout << "density slope = " << io::format_double(table.fit.slope) << "\n";

  if (!c.assertion.empty()) {
    auto kv = parse_assertion(c.assertion);
    if (!kv.count("slope") || !kv.count("tol"))
      throw ConfigError("density --assert needs slope=...,tol=...");
    if (std::abs(table.fit.slope - kv["slope"]) > kv["tol"])
      throw AssertionFailure("slope " + io::format_double(table.fit.slope) +
                             " outside " + io::format_double(kv["slope"]) +
                             " +- " + io::format_double(kv["tol"]));
  }
  return 0;
}

int run_age_density(const Common& c, double t, const std::string& edges_csv,
                    double window) {
  config::RunConfig cfg = load_config(c);
  sampling::IncrementLaw law = experiments::law_for(cfg);
  auto runs = experiments::run_replicas(cfg, law, c.threads);
  std::vector<double> edges = parse_list(edges_csv);
  experiments::AgeBandTable table =
      experiments::age_band_experiment(runs, t, edges, window, cfg.alpha);

  std::vector<io::CsvRow> rows;
  for (const auto& r : table.rows)
    rows.push_back({"age_density",
                    "band=[" + io::format_double(r.lo) + "," +
                        io::format_double(r.hi) + ")",
                    r.estimate.density, r.estimate.std_error});
  for (std::size_t i = 0; i < table.ratios.size(); ++i)
    rows.push_back({"age_density_ratio", "pair=" + std::to_string(i),
                    table.ratios[i], table.analytic[i]});
  std::ostringstream os;
  io::write_csv(os, rows);
  write_file(ensure_outdir(c) / "age_density.csv", os.str());

  if (!c.assertion.empty()) {
    auto kv = parse_assertion(c.assertion);
    if (!kv.count("ratio_tol"))
      throw ConfigError("age-density --assert needs ratio_tol=...");
    for (std::size_t i = 0; i < table.ratios.size(); ++i) {
      double rel = std::abs(table.ratios[i] / table.analytic[i] - 1.0);
      if (rel > kv["ratio_tol"])
        throw AssertionFailure("band ratio " + std::to_string(i) +
                               " off by " + io::format_double(rel));
    }
  }
  return 0;
}

int run_coaltime(const Common& c, double u, double beta,
                 const std::string& scales_csv, long long meet_replicas) {
  config::RunConfig cfg = load_config(c);
  std::vector<long long> scales;
  for (double s : parse_list(scales_csv))
    scales.push_back(static_cast<long long>(s));
  diagnostics::CoalescenceOptions opts;
  opts.seed = cfg.seed;
  opts.tail_constant = cfg.tail_constant;
  opts.x_max = cfg.x_max;
  auto ests = diagnostics::estimate_coalescence_laplace(
      u, beta, scales, static_cast<std::size_t>(meet_replicas), cfg.alpha,
      opts);
  std::vector<io::CsvRow> rows;
  for (const auto& e : ests)
    rows.push_back({"coaltime",
                    "n=" + std::to_string(e.scale_n) + ";u=" +
                        io::format_double(u) + ";beta=" +
                        io::format_double(beta),
                    e.estimate, e.half_width});
  std::ostringstream os;
  io::write_csv(os, rows);
  write_file(ensure_outdir(c) / "coaltime.csv", os.str());
  for (const auto& e : ests)
    std::cout << "n=" << e.scale_n << ": E exp(-beta T) = "
              << io::format_double(e.estimate) << " +- "
              << io::format_double(e.half_width)
              << (e.horizon_warning ? "  [widened: censoring]" : "") << "\n";
  return 0;
}

int run_green(const Common& c, double u, double beta, long long n,
              long long green_replicas) {
  config::RunConfig cfg = load_config(c);
  diagnostics::CoalescenceOptions opts;
  opts.seed = cfg.seed;
  opts.tail_constant = cfg.tail_constant;
  opts.x_max = cfg.x_max;
  diagnostics::GreenEstimate g = diagnostics::estimate_green(
      u, beta, n, static_cast<std::size_t>(green_replicas), cfg.alpha, opts);
  std::vector<io::CsvRow> rows{{"green",
                                "n=" + std::to_string(n) + ";u=" +
                                    io::format_double(u) + ";beta=" +
                                    io::format_double(beta),
                                g.value, g.std_error}};
  std::ostringstream os;
  io::write_csv(os, rows);
  write_file(ensure_outdir(c) / "green.csv", os.str());
  std::cout << "green = " << io::format_double(g.value) << " +- "
            << io::format_double(g.std_error) << "\n";
  return 0;
}

int run_check_compact(const Common& c, long long train_n, long long eval_n,
                      int n_lo, int n_hi) {
  config::RunConfig cfg = load_config(c);
  sampling::IncrementLaw law = experiments::law_for(cfg);

  auto collect = [&](std::uint32_t replica) {
    engine::RunResult r = engine::run_coalescing(
        config::to_sim_config(cfg, law, replica));
    engine::compute_ages(r);
    return std::move(r.paths);
  };

  std::vector<PathCollection> train, eval;
  for (long long i = 0; i < train_n; ++i)
    train.push_back(collect(static_cast<std::uint32_t>(i)));
  for (long long i = 0; i < eval_n; ++i)
    eval.push_back(collect(static_cast<std::uint32_t>(train_n + i)));

  diagnostics::CompactnessProfile prof =
      diagnostics::fit_profile(train, n_lo, n_hi);
  int passes = 0;
  diagnostics::CompactnessReport last;
  for (const PathCollection& coll : eval) {
    diagnostics::CompactnessReport rep =
        diagnostics::check_compactness(coll, prof, n_lo, n_hi);
    if (rep.pass) ++passes;
    last = rep;
  }
  double rate = eval_n > 0 ? static_cast<double>(passes) /
                                 static_cast<double>(eval_n)
                           : 1.0;
  fs::path dir = ensure_outdir(c);
  write_file(dir / "compactness.json", io::report_to_json(last));
  std::cout << "compactness pass rate: " << passes << "/" << eval_n << "\n";

  if (!c.assertion.empty()) {
    auto kv = parse_assertion(c.assertion);
    if (!kv.count("pass_rate"))
      throw ConfigError("check-compact --assert needs pass_rate=...");
    if (rate < kv["pass_rate"])
      throw AssertionFailure("pass rate " + io::format_double(rate) +
                             " below " + io::format_double(kv["pass_rate"]));
  }
  return 0;
}

int run_skeleton(const Common& c, const std::string& thetas_csv, int level) {
  config::RunConfig cfg = load_config(c);
  const auto* th = std::get_if<engine::ThetaGrid>(&cfg.start);
  if (!th)
    throw ConfigError("skeleton: the config start must be a theta_grid "
                      "(the reference system)");
  sampling::IncrementLaw law = experiments::law_for(cfg);
  std::vector<double> thetas = parse_list(thetas_csv);

  std::vector<std::vector<double>> gaps(thetas.size());
  for (long long rep = 0; rep < cfg.replicas; ++rep) {
    engine::RunResult full = engine::run_coalescing(
        config::to_sim_config(cfg, law, static_cast<std::uint32_t>(rep)));
    std::vector<engine::RunResult> ths;
    for (double theta : thetas) {
      config::RunConfig tcfg = cfg;
      engine::ThetaGrid grid = *th;
      grid.theta_space = theta;
      grid.theta_time = theta;
      tcfg.start = grid;
      ths.push_back(engine::run_coalescing(config::to_sim_config(
          tcfg, law, static_cast<std::uint32_t>(rep))));
    }
    metrics::MetricOptions mopts;
    mopts.max_grid_points = 16;
    mopts.max_segment_skip = 4;
    mopts.rho_terms = std::max(2, level);
    std::vector<double> g = diagnostics::skeleton_gap(full, ths, level, mopts);
    for (std::size_t i = 0; i < g.size(); ++i) gaps[i].push_back(g[i]);
  }

  std::vector<io::CsvRow> rows;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    rows.push_back({"skeleton_gap_median",
                    "theta=" + io::format_double(thetas[i]),
                    experiments::median(gaps[i]), 0.0});
    rows.push_back({"skeleton_gap_p90", "theta=" + io::format_double(thetas[i]),
                    experiments::quantile(gaps[i], 0.9), 0.0});
  }
  std::ostringstream os;
  io::write_csv(os, rows);
  write_file(ensure_outdir(c) / "skeleton.csv", os.str());
  for (std::size_t i = 0; i < thetas.size(); ++i)
    std::cout << "theta=" << thetas[i]
              << " median gap = " << experiments::median(gaps[i]) << "\n";
  return 0;
}

int run_calibrate(const Common& c) {
  config::RunConfig cfg = load_config(c);
  sampling::CalibrationOptions opts;
  opts.x_max = cfg.x_max;
  opts.seed = cfg.seed ^ 0xca11b7a7e5eedull;
  double result =
      sampling::calibrate_tail_constant({cfg.alpha, cfg.stable_scale}, opts);
  nlohmann::json j;
  j["schema"] = "stableweb.calibration/1";
  j["alpha"] = cfg.alpha;
  j["stable_scale"] = cfg.stable_scale;
  j["tail_constant"] = result;
  write_file(ensure_outdir(c) / "calibration.json", j.dump(2) + "\n");
  std::cout << "tail_constant = " << io::format_double(result) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"stableweb: coalescing heavy-tailed walk simulator and analysis"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config_path, "run configuration JSON");
  app.add_option("--out", c.out_dir, "output directory (STABLEWEB_OUT overrides)");
  auto* seed_opt = app.add_option("--seed", c.seed, "seed override");
  app.add_option("--replicas", c.replicas, "replica count override");
  app.add_option("--threads", c.threads, "replica-parallel worker threads");
  app.add_option("--assert", c.assertion, "statistical assertion (exit 4 on failure)");

  auto* simulate = app.add_subcommand("simulate", "run replica simulations");
  auto* filter = app.add_subcommand("filter", "apply the age filter");
  std::string in_file, a_file, b_file;
  double delta = 0.5;
  int level = 1;
  filter->add_option("--in", in_file)->required();
  filter->add_option("--delta", delta)->required();
  auto* project = app.add_subcommand("project", "apply the projection");
  project->add_option("--in", in_file)->required();
  project->add_option("--level", level)->required();
  auto* metric = app.add_subcommand("metric", "pairwise path distances");
  metric->add_option("--a", a_file)->required();
  metric->add_option("--b", b_file)->required();
  auto* hausdorff = app.add_subcommand("hausdorff", "collection distance");
  hausdorff->add_option("--a", a_file)->required();
  hausdorff->add_option("--b", b_file)->required();
  auto* density = app.add_subcommand("density", "walker density curve");
  double window = 1.0, t_measure = 1.0;
  std::string edges = "0.25,0.5,1.0,2.0";
  density->add_option("--window", window)->required();
  auto* age_density = app.add_subcommand("age-density", "age band densities");
  age_density->add_option("--t", t_measure)->required();
  age_density->add_option("--edges", edges);
  age_density->add_option("--window", window)->required();
  auto* coaltime = app.add_subcommand("coaltime", "meeting-time transforms");
  double u = 1.0, beta = 1.0;
  std::string scales = "1024,16384";
  long long meet_replicas = 10000, green_replicas = 2000, n_green = 1 << 10;
  coaltime->add_option("--u", u)->required();
  coaltime->add_option("--beta", beta);
  coaltime->add_option("--scales", scales);
  coaltime->add_option("--meet-replicas", meet_replicas);
  auto* green = app.add_subcommand("green", "discounted occupation estimate");
  green->add_option("--u", u)->required();
  green->add_option("--beta", beta);
  green->add_option("--n", n_green);
  green->add_option("--green-replicas", green_replicas);
  auto* compact = app.add_subcommand("check-compact", "fit and evaluate K(theta)");
  long long train_n = 100, eval_n = 100;
  int n_lo = 1, n_hi = 3;
  compact->add_option("--train", train_n);
  compact->add_option("--eval", eval_n);
  compact->add_option("--n-lo", n_lo);
  compact->add_option("--n-hi", n_hi);
  auto* skeleton = app.add_subcommand("skeleton", "coupled theta-skeleton gaps");
  std::string thetas = "0.5,0.25,0.125";
  skeleton->add_option("--thetas", thetas);
  skeleton->add_option("--level", level);
  auto* calibrate = app.add_subcommand("calibrate", "match C to the stable law");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  c.seed_set = seed_opt->count() > 0;

  try {
    if (simulate->parsed()) return run_simulate(c);
    if (filter->parsed()) return run_filter(c, in_file, delta, level, false);
    if (project->parsed()) return run_filter(c, in_file, delta, level, true);
    if (metric->parsed()) return run_metric(c, a_file, b_file, false);
    if (hausdorff->parsed()) return run_metric(c, a_file, b_file, true);
    if (density->parsed()) return run_density(c, window);
    if (age_density->parsed())
      return run_age_density(c, t_measure, edges, window);
    if (coaltime->parsed())
      return run_coaltime(c, u, beta, scales, meet_replicas);
    if (green->parsed()) return run_green(c, u, beta, n_green, green_replicas);
    if (compact->parsed())
      return run_check_compact(c, train_n, eval_n, n_lo, n_hi);
    if (skeleton->parsed()) return run_skeleton(c, thetas, level);
    if (calibrate->parsed()) return run_calibrate(c);
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failed: " << e.what() << "\n";
    return 4;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace stableweb::cli
