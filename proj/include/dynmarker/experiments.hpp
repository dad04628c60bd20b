#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "dynmarker/sim_engine.hpp"

namespace dynmarker {

/// Initial condition for batch run `seed`: lateral offset uniform in a disc,
/// yaw uniform in +-batch_yaw_range. The scenario's start height is kept.
inline ScenarioConfig randomize_initial(ScenarioConfig cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e9955bd1e995ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = cfg.batch_lateral_radius * std::sqrt(u(rng));
  const double a = 2.0 * std::numbers::pi * u(rng);
  const double yaw = cfg.batch_yaw_range * (2.0 * u(rng) - 1.0);
  cfg.initial_position.x() = r * std::cos(a);
  cfg.initial_position.y() = r * std::sin(a);
  cfg.initial_yaw = cfg.desired_yaw + yaw;
  cfg.seed = seed;
  return cfg;
}

struct BatchAggregate {
  std::size_t runs = 0;
  std::size_t landed = 0;
  std::size_t diverged = 0;
  double success_rate = 0.0;
  double mean_lateral_error = 0.0;  // over landed runs
  double sd_lateral_error = 0.0;
  double max_lateral_error = 0.0;
  double mean_final_yaw_error = 0.0;
};

inline BatchAggregate aggregate(const std::vector<SummaryMetrics>& runs) {
  BatchAggregate a;
  a.runs = runs.size();
  double sum = 0.0, sum_sq = 0.0, yaw = 0.0;
  for (const auto& m : runs) {
    if (m.status == RunStatus::Diverged) ++a.diverged;
    if (m.status != RunStatus::Landed) continue;
    ++a.landed;
    sum += m.final_lateral_error;
    sum_sq += m.final_lateral_error * m.final_lateral_error;
    yaw += m.final_yaw_error;
    a.max_lateral_error = std::max(a.max_lateral_error, m.final_lateral_error);
  }
  if (a.runs) a.success_rate = static_cast<double>(a.landed) / static_cast<double>(a.runs);
  if (a.landed) {
    const double n = static_cast<double>(a.landed);
    a.mean_lateral_error = sum / n;
    a.sd_lateral_error = a.landed > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * a.mean_lateral_error * a.mean_lateral_error) / (n - 1.0))) : 0.0;
    a.mean_final_yaw_error = yaw / n;
  }
  return a;
}

/// Runs `n` randomized scenarios with seeds seed_base .. seed_base + n - 1.
/// Results are indexed by run, so the outcome does not depend on `jobs`.
inline std::vector<SummaryMetrics> run_batch(const ScenarioConfig& base, std::size_t n, std::uint64_t seed_base,
                                             std::size_t jobs = 1) {
  std::vector<SummaryMetrics> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      out[i] = collect_metrics(run_scenario(randomize_initial(base, seed_base + i)));
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct StrategyResult {
  Strategy strategy;
  SimTrace trace;
  SummaryMetrics metrics;
};

/// Same scenario and seed under each marker strategy.
inline std::vector<StrategyResult> compare_strategies(const ScenarioConfig& base) {
  std::vector<StrategyResult> out;
  for (Strategy s : {Strategy::Dynamic, Strategy::StaticFullPose, Strategy::StaticLongRange}) {
    ScenarioConfig cfg = base;
    cfg.strategy = s;
    SimTrace trace = run_scenario(cfg);
    SummaryMetrics m = collect_metrics(trace);
    out.push_back(StrategyResult{s, std::move(trace), m});
  }
  return out;
}

}  // namespace dynmarker
