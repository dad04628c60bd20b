#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynmarker/experiments.hpp"
#include "dynmarker/scenario_io.hpp"
#include "dynmarker/trace_io.hpp"

namespace dynmarker {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitSimulation = 2 };

namespace detail {

struct CliOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::size_t n = 50;
  std::optional<std::string> strategy;
  std::size_t jobs = 1;
  std::optional<std::string> timing_scheme;
  std::optional<std::string> eq3_variant;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("--out", "cannot write '" + p.string() + "'");
  f << content;
}

inline std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

inline ScenarioConfig resolve(const CliOptions& o) {
  ScenarioConfig cfg = load_scenario(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.strategy) cfg.strategy = parse_strategy(*o.strategy, "--strategy");
  if (o.timing_scheme) cfg.scheme = parse_scheme(*o.timing_scheme, "--timing-scheme");
  if (o.eq3_variant) cfg.policy.eq3_variant = parse_eq3_variant(*o.eq3_variant, "--eq3-variant");
  return cfg;
}

inline nlohmann::ordered_json aggregate_json(const BatchAggregate& a, std::uint64_t seed_base) {
  nlohmann::ordered_json j;
  j["runs"] = a.runs;
  j["seed_base"] = seed_base;
  j["landed"] = a.landed;
  j["diverged"] = a.diverged;
  j["success_rate"] = a.success_rate;
  j["mean_lateral_error_m"] = a.mean_lateral_error;
  j["sd_lateral_error_m"] = a.sd_lateral_error;
  j["max_lateral_error_m"] = a.max_lateral_error;
  j["mean_final_yaw_error_rad"] = a.mean_final_yaw_error;
  return j;
}

inline int cmd_run(const CliOptions& o, std::ostream& out) {
  const ScenarioConfig cfg = resolve(o);
  const SimTrace trace = run_scenario(cfg);
  const SummaryMetrics m = collect_metrics(trace);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  std::ostringstream csv, events;
  write_trace_csv(csv, trace);
  write_events_csv(events, trace);
  write_file(dir / "trace.csv", csv.str());
  write_file(dir / "events.csv", events.str());
  write_file(dir / "summary.json", summary_json(m).dump(2) + "\n");
  out << "status=" << to_string(m.status) << " lateral_error_m=" << fmt("%.4f", m.final_lateral_error)
      << " final_yaw_error_rad=" << fmt("%.4f", m.final_yaw_error) << " marker_updates=" << m.marker_updates
      << " invalidated_frames=" << m.invalidated_frames << '\n';
  return m.status == RunStatus::Diverged ? kExitSimulation : kExitOk;
}

inline int cmd_batch(const CliOptions& o, std::ostream& out) {
  const ScenarioConfig cfg = resolve(o);
  const std::uint64_t seed_base = cfg.seed;
  const auto runs = run_batch(cfg, o.n, seed_base, o.jobs);
  const BatchAggregate agg = aggregate(runs);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto j = summary_json(runs[i]);
    j["seed"] = seed_base + i;
    char name[48];
    std::snprintf(name, sizeof name, "run_%04zu_summary.json", i);
    write_file(dir / name, j.dump(2) + "\n");
    all.push_back(j);
  }
  nlohmann::ordered_json doc;
  doc["aggregate"] = aggregate_json(agg, seed_base);
  doc["runs"] = all;
  write_file(dir / "batch_summary.json", doc.dump(2) + "\n");
  out << "runs=" << agg.runs << " landed=" << agg.landed << " success_rate=" << fmt("%.3f", agg.success_rate)
      << " mean_lateral_error_m=" << fmt("%.4f", agg.mean_lateral_error)
      << " sd_lateral_error_m=" << fmt("%.4f", agg.sd_lateral_error) << '\n';
  return agg.diverged ? kExitSimulation : kExitOk;
}

inline int cmd_compare(const CliOptions& o, std::ostream& out) {
  const ScenarioConfig cfg = resolve(o);
  const auto results = compare_strategies(cfg);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);

  std::ostringstream table;
  table << "strategy,status,final_lateral_error_m,initial_yaw_error_rad,final_yaw_error_rad,detections,dropouts,"
           "max_detection_height_m,marker_updates\n";
  bool diverged = false;
  for (const auto& r : results) {
    const auto& m = r.metrics;
    diverged = diverged || m.status == RunStatus::Diverged;
    table << to_string(r.strategy) << ',' << to_string(m.status) << ',' << fmt("%.6f", m.final_lateral_error) << ','
          << fmt("%.6f", m.initial_yaw_error) << ',' << fmt("%.6f", m.final_yaw_error) << ',' << m.detections << ','
          << m.dropouts << ',' << fmt("%.6f", m.max_detection_height) << ',' << m.marker_updates << '\n';
    write_file(dir / (std::string(to_string(r.strategy)) + "_summary.json"), summary_json(m).dump(2) + "\n");
  }
  write_file(dir / "compare.csv", table.str());

  char line[160];
  std::snprintf(line, sizeof line, "%-18s %-11s %10s %10s %10s %10s %10s\n", "strategy", "status", "lat_err_m",
                "yaw0_rad", "yaw_rad", "detect", "max_det_h");
  out << line;
  for (const auto& r : results) {
    const auto& m = r.metrics;
    std::snprintf(line, sizeof line, "%-18s %-11s %10.4f %10.4f %10.4f %10llu %10.3f\n",
                  std::string(to_string(r.strategy)).c_str(), std::string(to_string(m.status)).c_str(),
                  m.final_lateral_error, m.initial_yaw_error, m.final_yaw_error,
                  static_cast<unsigned long long>(m.detections), m.max_detection_height);
    out << line;
  }
  return diverged ? kExitSimulation : kExitOk;
}

}  // namespace detail

/// Entry point of the `dynmarker` tool. Exit codes: 0 success, 1 bad
/// invocation or scenario, 2 a run diverged.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dynamic fiducial marker landing simulator", "dynmarker"};
  app.require_subcommand(1, 1);
  detail::CliOptions o;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario JSON document")->required();
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Noise seed (batch: seed of the first run)");
    sub->add_option("--strategy", o.strategy, "dynamic | static-full-pose | static-long-range")
        ->check(CLI::IsMember({"dynamic", "static-full-pose", "static-long-range"}));
    sub->add_option("--timing-scheme", o.timing_scheme, "safe | optimized")->check(CLI::IsMember({"safe", "optimized"}));
    sub->add_option("--eq3-variant", o.eq3_variant, "consistent | verbatim")
        ->check(CLI::IsMember({"consistent", "verbatim"}));
  };
  CLI::App* run = app.add_subcommand("run", "Run one scenario; writes trace.csv, events.csv, summary.json");
  add_common(run);
  CLI::App* batch = app.add_subcommand("batch", "Run N randomized scenarios; writes per-run and aggregate summaries");
  add_common(batch);
  batch->add_option("--n", o.n, "Number of runs")->check(CLI::PositiveNumber);
  batch->add_option("--jobs", o.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  CLI::App* compare = app.add_subcommand("compare", "Run all three marker strategies on one scenario");
  add_common(compare);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (run->parsed()) return detail::cmd_run(o, out);
    if (batch->parsed()) return detail::cmd_batch(o, out);
    return detail::cmd_compare(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "simulation error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace dynmarker
