#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "dynmarker/timing.hpp"

// Frame-level replay of one marker update: camera frames captured every
// d_frame, each ready after its own video + pose latency. Config ids are
// 0 (old) and 1 (new).
namespace dynmarker::protocol {

struct FrameOutcome {
  double capture = 0.0;
  double ready = 0.0;
  std::uint64_t displayed = 0;
  std::uint64_t detector = 0;
  bool in_flight = false;
  ValidityStamp stamp;
  bool window_hit = false;
};

struct ReplayCounts {
  int frames = 0;
  int invalid = 0;
  int mismatched = 0;
  int ok_but_mismatched = 0;
  int mismatched_outside_window = 0;
};

template <class Fn>
ReplayCounts replay_update(const UpdatePlan& plan, const DelayModel& model, std::mt19937_64& rng, Fn&& on_frame) {
  const auto& tl = plan.timeline;
  const double d_frame = tl.delays.d_frame;
  ReplayCounts c;
  const auto first = static_cast<long>(std::floor((tl.t0 - 0.5) / d_frame));
  const auto last = static_cast<long>(std::ceil((plan.completes_at + 0.5) / d_frame));
  for (long k = first; k <= last; ++k) {
    FrameOutcome f;
    f.capture = static_cast<double>(k) * d_frame;
    f.ready = f.capture + model.d_video.sample(rng) + model.d_pose.sample(rng);
    if (f.ready <= tl.t0 || f.ready > plan.completes_at + 0.2) continue;
    f.displayed = f.capture >= tl.tb ? 1 : 0;
    f.detector = f.ready >= plan.detector_commit ? 1 : 0;
    f.in_flight = f.ready <= plan.completes_at;
    f.stamp = stamp_validity(f.ready, f.displayed, f.detector, f.in_flight ? std::optional(plan) : std::nullopt);
    f.window_hit = f.in_flight && in_wait_window(f.ready, plan);
    ++c.frames;
    if (!f.stamp.valid) ++c.invalid;
    if (f.displayed != f.detector) {
      ++c.mismatched;
      if (f.stamp.valid) ++c.ok_but_mismatched;
      if (!f.window_hit) ++c.mismatched_outside_window;
    }
    on_frame(f);
  }
  return c;
}

inline ReplayCounts replay_update(const UpdatePlan& plan, const DelayModel& model, std::mt19937_64& rng) {
  return replay_update(plan, model, rng, [](const FrameOutcome&) {});
}

/// Random but admissible delay model: confirmation never precedes display.
inline DelayModel random_delay_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto range = [&](double lo, double hi) {
    const double a = lo + (hi - lo) * u(rng), b = lo + (hi - lo) * u(rng);
    return Delay{std::min(a, b), std::max(a, b)};
  };
  DelayModel m;
  m.d_frame = 0.010 + 0.090 * u(rng);
  m.d_fu = range(0.0, 0.050);
  m.d_ms = range(0.0, 0.080);
  m.d_mu = range(m.d_ms.hi, m.d_ms.hi + 0.080);
  m.d_video = range(0.0, 0.020);
  m.d_pose = range(0.0, 0.020);
  return m;
}

}  // namespace dynmarker::protocol
