#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "dynmarker/errors.hpp"

namespace dynmarker {

/// Constant (lo == hi) or uniform on [lo, hi].
struct Delay {
  double lo = 0.0;
  double hi = 0.0;

  static Delay constant(double v) { return Delay{v, v}; }
  static Delay uniform(double a, double b) { return Delay{a, b}; }

  bool is_constant() const { return lo == hi; }
  double mean() const { return 0.5 * (lo + hi); }
  double variance() const { return (hi - lo) * (hi - lo) / 12.0; }

  double sample(std::mt19937_64& rng) const {
    if (is_constant()) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }

  void validate(std::string_view name) const {
    if (!(lo >= 0.0 && hi >= lo)) throw DomainError(std::string(name) + ": delay must satisfy 0 <= min <= max");
  }
};

/// One draw of every delay for a single marker update.
struct DelaySample {
  double d_fu = 0.0;
  double d_ms = 0.0;
  double d_mu = 0.0;
  double d_frame = 0.0;
  double d_video = 0.0;
  double d_pose = 0.0;
};

struct DelayModel {
  Delay d_fu = Delay::constant(0.005);   // detector update + confirmation
  Delay d_ms = Delay::constant(0.020);   // command to marker on screen
  Delay d_mu = Delay::uniform(0.030, 0.045);  // command to screen confirmation
  Delay d_video = Delay::constant(0.005);
  Delay d_pose = Delay::constant(0.002);
  double d_frame = 0.033;
  std::optional<double> d_safety;  // defaults to d_frame

  double safety() const { return d_safety.value_or(d_frame); }

  void validate() const {
    d_fu.validate("d_fu");
    d_ms.validate("d_ms");
    d_mu.validate("d_mu");
    d_video.validate("d_video");
    d_pose.validate("d_pose");
    if (!(d_frame > 0.0)) throw DomainError("d_frame must be > 0");
    if (d_safety && !(*d_safety >= 0.0)) throw DomainError("d_safety must be >= 0");
    if (d_mu.lo < d_ms.hi) {
      throw DomainError("d_mu: confirmation cannot precede display (need min d_mu >= max d_ms)");
    }
  }

  DelaySample sample(std::mt19937_64& rng) const {
    DelaySample s;
    s.d_fu = d_fu.sample(rng);
    s.d_ms = d_ms.sample(rng);
    s.d_mu = d_mu.sample(rng);
    s.d_frame = d_frame;
    s.d_video = d_video.sample(rng);
    s.d_pose = d_pose.sample(rng);
    return s;
  }
};

/// Event times of one marker update: command sent (t0), detector confirmed
/// (ta), marker on screen (tb), screen confirmed (tc), first pose of the new
/// marker ready (td).
struct UpdateTimeline {
  double t0 = 0.0, ta = 0.0, tb = 0.0, tc = 0.0, td = 0.0;
  DelaySample delays;
  double d_cp = 0.0;
  double d_cl = 0.0;
  double d_diff = 0.0;
};

inline UpdateTimeline schedule_update(double t0, const DelaySample& d) {
  for (double v : {d.d_fu, d.d_ms, d.d_mu, d.d_frame, d.d_video, d.d_pose}) {
    if (!(v >= 0.0)) throw DomainError("schedule_update: delays must be >= 0");
  }
  if (d.d_mu < d.d_ms) throw DomainError("schedule_update: d_mu < d_ms (confirmation before display)");
  UpdateTimeline tl;
  tl.delays = d;
  tl.t0 = t0;
  tl.ta = t0 + d.d_fu;
  tl.tb = t0 + d.d_ms;
  tl.tc = t0 + d.d_mu;
  tl.d_cp = d.d_frame + d.d_video + d.d_pose;
  tl.d_cl = d.d_ms + tl.d_cp;
  tl.d_diff = tl.d_cl - d.d_mu;
  tl.td = tl.tb + tl.d_cp;
  return tl;
}

inline double compute_safe_wait(double d_cl, double d_mu) {
  if (!(d_cl >= 0.0 && d_mu >= 0.0)) throw DomainError("compute_safe_wait: delays must be >= 0");
  return std::max(d_cl, d_mu);
}

struct OptimizationConditions {
  bool d_mu_lt_d_cl = false;
  bool d_fu_small = false;
  bool d_cp_constant = false;

  bool all() const { return d_mu_lt_d_cl && d_fu_small && d_cp_constant; }
};

inline std::optional<double> compute_optimized_wait(double d_fu, double d_safety, const OptimizationConditions& c) {
  if (!c.all()) return std::nullopt;
  return d_fu + d_safety;
}

/// "d_fu small" is d_fu <= d_frame / 4; "d_cp constant" is a coefficient of
/// variation of at most 5%. d_mu < d_cl must hold for every possible draw.
inline OptimizationConditions evaluate_conditions(const DelayModel& m) {
  OptimizationConditions c;
  const double d_cl_min = m.d_ms.lo + m.d_frame + m.d_video.lo + m.d_pose.lo;
  c.d_mu_lt_d_cl = m.d_mu.hi < d_cl_min;
  c.d_fu_small = m.d_fu.hi <= 0.25 * m.d_frame;
  const double cp_mean = m.d_frame + m.d_video.mean() + m.d_pose.mean();
  const double cp_sd = std::sqrt(m.d_video.variance() + m.d_pose.variance());
  c.d_cp_constant = cp_sd <= 0.05 * cp_mean;
  return c;
}

enum class TimingScheme { Safe, Optimized };

constexpr std::string_view to_string(TimingScheme s) { return s == TimingScheme::Safe ? "safe" : "optimized"; }

/// A scheduled update together with when the detector switches models and
/// which estimate-ready times must be discarded.
struct UpdatePlan {
  UpdateTimeline timeline;
  TimingScheme scheme = TimingScheme::Safe;  // scheme actually applied
  double d_wait = 0.0;
  double detector_commit = 0.0;  // believed config changes at this instant
  double window_begin = 0.0;     // invalid estimates: ready time in [begin, end)
  double window_end = 0.0;
  double completes_at = 0.0;     // next update may start
};

/// Safe: the detector takes the new model at ta and nothing ready within
/// max(d_cl, d_mu) of t0 is trusted. Optimized (when its conditions hold):
/// the detector update starts at max(tc, td - d_fu) and the d_fu + d_safety
/// interval ending at the commit is discarded; older frames stay valid.
inline UpdatePlan plan_update(const UpdateTimeline& tl, TimingScheme requested, const OptimizationConditions& cond,
                              double d_safety) {
  UpdatePlan p;
  p.timeline = tl;
  const auto optimized = requested == TimingScheme::Optimized
                             ? compute_optimized_wait(tl.delays.d_fu, d_safety, cond)
                             : std::nullopt;
  if (optimized) {
    p.scheme = TimingScheme::Optimized;
    p.d_wait = *optimized;
    const double start = std::max(tl.tc, tl.td - tl.delays.d_fu);
    p.detector_commit = start + tl.delays.d_fu;
    p.window_begin = p.detector_commit - p.d_wait;
    p.window_end = p.detector_commit;
    p.completes_at = std::max(p.detector_commit, tl.tc);
  } else {
    p.scheme = TimingScheme::Safe;
    p.d_wait = compute_safe_wait(tl.d_cl, tl.delays.d_mu);
    p.detector_commit = tl.ta;
    p.window_begin = tl.t0;
    p.window_end = tl.t0 + p.d_wait;
    p.completes_at = std::max({tl.ta, tl.tc, p.window_end});
  }
  return p;
}

inline bool in_wait_window(double ready_time, const UpdatePlan& p) {
  return ready_time >= p.window_begin && ready_time < p.window_end;
}

enum class ValidityReason { Ok, WithinWaitWindow, ConfigMismatch };

constexpr std::string_view to_string(ValidityReason r) {
  switch (r) {
    case ValidityReason::Ok: return "ok";
    case ValidityReason::WithinWaitWindow: return "within_wait_window";
    case ValidityReason::ConfigMismatch: return "config_mismatch";
  }
  return "?";
}

struct ValidityStamp {
  bool valid = true;
  ValidityReason reason = ValidityReason::Ok;
};

/// `ready_time` is when the pose became available; `active` is the update in
/// flight, if any.
inline ValidityStamp stamp_validity(double ready_time, std::uint64_t frame_config_id, std::uint64_t detector_config_id,
                                    const std::optional<UpdatePlan>& active) {
  if (frame_config_id != detector_config_id) return ValidityStamp{false, ValidityReason::ConfigMismatch};
  if (active && in_wait_window(ready_time, *active)) return ValidityStamp{false, ValidityReason::WithinWaitWindow};
  return ValidityStamp{true, ValidityReason::Ok};
}

}  // namespace dynmarker
