#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <string_view>
#include <vector>

#include "dynmarker/errors.hpp"
#include "dynmarker/geometry.hpp"
#include "dynmarker/marker_controller.hpp"
#include "dynmarker/marker_model.hpp"
#include "dynmarker/pbvs.hpp"
#include "dynmarker/perception.hpp"
#include "dynmarker/timing.hpp"

namespace dynmarker {

enum class Strategy { Dynamic, StaticFullPose, StaticLongRange };

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Dynamic: return "dynamic";
    case Strategy::StaticFullPose: return "static-full-pose";
    case Strategy::StaticLongRange: return "static-long-range";
  }
  return "?";
}

struct ScenarioConfig {
  CameraIntrinsics camera;
  Screen screen;
  FamilySet families;
  SwitchPolicy policy;
  DelayModel delays;  // d_frame mirrors camera.frame_period
  TimingScheme scheme = TimingScheme::Safe;
  ServoSettings servo;
  double command_lag = 0.0;     // first-order time constant, seconds
  double target_timeout = 1.0;  // hover when no valid pose for this long
  double commit_height = 0.3;   // below this estimated height the descent no longer needs a target

  Vec3 initial_position{0.0, 0.0, 2.5};  // camera in the marker frame
  double initial_yaw = 0.0;
  double desired_height = 2.5;
  double desired_yaw = 0.0;
  std::optional<double> landing_trigger_time = 3.0;

  Strategy strategy = Strategy::Dynamic;
  std::uint64_t seed = 1;
  double duration = 40.0;
  double tick = 0.001;
  double touchdown_height = 0.02;
  double bounds = 20.0;  // half-extent of the allowed box around the marker

  // Batch randomization of the initial condition.
  double batch_lateral_radius = 0.5;
  double batch_yaw_range = std::numbers::pi / 4.0;

  void validate() const {
    camera.validate();
    screen.validate();
    families.long_range.validate();
    families.full_pose.validate();
    if (families.long_range.kind != FamilyKind::LongRangePositionOnly ||
        families.full_pose.kind != FamilyKind::ShortRangeFullPose) {
      throw DomainError("ScenarioConfig: family slots hold the wrong kinds");
    }
    policy.validate();
    delays.validate();
    if (delays.d_frame != camera.frame_period) throw DomainError("ScenarioConfig: d_frame must equal camera.frame_period");
    if (!(duration > 0.0)) throw DomainError("ScenarioConfig: duration must be > 0");
    if (!(tick > 0.0 && tick <= 0.5 * camera.frame_period)) {
      throw DomainError("ScenarioConfig: tick must be in (0, frame_period / 2]");
    }
    if (!(servo.lambda > 0.0)) throw DomainError("ScenarioConfig: lambda must be > 0");
    if (!(servo.descent_rate >= 0.0)) throw DomainError("ScenarioConfig: descent_rate must be >= 0");
    if (!(command_lag >= 0.0)) throw DomainError("ScenarioConfig: command_lag must be >= 0");
    if (!(touchdown_height >= 0.0)) throw DomainError("ScenarioConfig: touchdown_height must be >= 0");
    if (!(initial_position.z() > touchdown_height)) throw DomainError("ScenarioConfig: initial height at or below touchdown");
    if (!(bounds > 0.0)) throw DomainError("ScenarioConfig: bounds must be > 0");
  }

  /// Delays as the protocol sees them: screen refresh adds to both the
  /// display and the confirmation delay.
  DelayModel effective_delays() const {
    DelayModel d = delays;
    d.d_ms = Delay{d.d_ms.lo + screen.refresh_delay, d.d_ms.hi + screen.refresh_delay};
    d.d_mu = Delay{d.d_mu.lo + screen.refresh_delay, d.d_mu.hi + screen.refresh_delay};
    return d;
  }
};

/// Camera (= body) pose in the marker frame: maps F_c coordinates to F_m.
struct VehicleState {
  Pose pose{Mat3::Identity(), Vec3::Zero(), Frame::Camera, Frame::Marker};
  double time = 0.0;

  double height() const { return pose.translation.z(); }
  double yaw() const { return yaw_of(pose.rotation); }
};

/// Euler step with body-frame velocities; the rotation increment uses the
/// exponential map and the result is re-orthonormalized.
inline VehicleState vehicle_step(const VehicleState& s, const VelocityCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw DomainError("vehicle_step: dt must be > 0");
  if (!cmd.linear.allFinite() || !cmd.angular.allFinite()) throw DomainError("vehicle_step: non-finite command");
  VehicleState out = s;
  out.time = s.time + dt;
  if (!cmd.linear.isZero(0.0)) out.pose.translation += s.pose.rotation * cmd.linear * dt;
  if (!cmd.angular.isZero(0.0)) out.pose.rotation = orthonormalize(s.pose.rotation * exp_so3(cmd.angular * dt));
  return out;
}

/// Downward-looking camera at `position` with yaw about the marker normal.
inline Pose downward_camera(const Vec3& position, double yaw) {
  return Pose{rot_z(yaw) * rot_x(std::numbers::pi), position, Frame::Camera, Frame::Marker};
}

/// Desired pose F_m -> F_c* for hovering `height` above the marker center.
inline Pose desired_pose(double height, double yaw) {
  Pose p = invert(downward_camera(Vec3{0.0, 0.0, height}, yaw));
  p.to = Frame::DesiredCamera;
  return p;
}

enum class EventType { Display, Confirmation, Capture, DetectorUpdate, EstimateReady, UpdateComplete, CommandIssued };

constexpr std::string_view to_string(EventType e) {
  switch (e) {
    case EventType::Display: return "display";
    case EventType::Confirmation: return "confirmation";
    case EventType::Capture: return "capture";
    case EventType::DetectorUpdate: return "detector_update";
    case EventType::EstimateReady: return "estimate_ready";
    case EventType::UpdateComplete: return "update_complete";
    case EventType::CommandIssued: return "command_issued";
  }
  return "?";
}

struct EventRecord {
  double time = 0.0;
  EventType type = EventType::Capture;
  std::uint64_t config_id = 0;
};

/// One row per processed camera frame, taken when its pose would be ready.
struct TraceRecord {
  double time = 0.0;          // estimate ready
  double capture_time = 0.0;
  Vec3 true_position = Vec3::Zero();  // camera in F_m at capture
  double true_yaw = 0.0;
  std::optional<Dropout> dropout;     // set when nothing was detected
  std::optional<ValidityStamp> stamp; // set when detected
  Vec3 est_translation = Vec3::Zero(); // c t_m
  std::optional<double> est_yaw;
  std::uint64_t frame_config_id = 0;
  std::uint64_t detector_config_id = 0;
  FamilyKind displayed_family = FamilyKind::LongRangePositionOnly;
  double displayed_size = 0.0;
  int displayed_cells = 0;
  VelocityCommand command;  // in force after this record
};

enum class RunStatus { Landed, NotLanded, Diverged };

constexpr std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Landed: return "landed";
    case RunStatus::NotLanded: return "not-landed";
    case RunStatus::Diverged: return "diverged";
  }
  return "?";
}

struct SimTrace {
  std::vector<TraceRecord> records;
  std::vector<EventRecord> events;
  RunStatus status = RunStatus::NotLanded;
  VehicleState initial_state;
  VehicleState final_state;
  double desired_yaw = 0.0;
  std::optional<double> landing_trigger_time;
  std::optional<double> touchdown_time;
  std::uint64_t marker_updates = 0;
  std::uint64_t family_switches = 0;
};

struct SummaryMetrics {
  RunStatus status = RunStatus::NotLanded;
  double final_lateral_error = 0.0;  // meters, horizontal distance to marker center
  double initial_yaw_error = 0.0;    // radians, absolute
  double final_yaw_error = 0.0;      // radians, absolute
  std::optional<double> time_to_land;  // from landing trigger (or start) to touchdown
  std::uint64_t frames = 0;
  std::uint64_t detections = 0;
  std::uint64_t dropouts = 0;
  std::uint64_t invalidated_frames = 0;
  std::uint64_t marker_updates = 0;
  std::uint64_t family_switches = 0;
  std::optional<double> first_full_pose_time;  // first valid yaw-bearing estimate
  double max_detection_height = 0.0;
};

inline SummaryMetrics collect_metrics(const SimTrace& trace) {
  if (trace.records.empty()) throw DomainError("collect_metrics: empty trace");
  SummaryMetrics m;
  m.status = trace.status;
  const Vec3& p = trace.final_state.pose.translation;
  m.final_lateral_error = std::hypot(p.x(), p.y());
  m.initial_yaw_error = std::abs(wrap_angle(trace.initial_state.yaw() - trace.desired_yaw));
  m.final_yaw_error = std::abs(wrap_angle(trace.final_state.yaw() - trace.desired_yaw));
  if (trace.status == RunStatus::Landed && trace.touchdown_time) {
    m.time_to_land = *trace.touchdown_time - trace.landing_trigger_time.value_or(0.0);
  }
  m.frames = trace.records.size();
  for (const auto& r : trace.records) {
    if (r.dropout) {
      ++m.dropouts;
      continue;
    }
    ++m.detections;
    m.max_detection_height = std::max(m.max_detection_height, r.true_position.z());
    if (r.stamp && !r.stamp->valid) ++m.invalidated_frames;
    if (r.stamp && r.stamp->valid && r.est_yaw && !m.first_full_pose_time) m.first_full_pose_time = r.time;
  }
  m.marker_updates = trace.marker_updates;
  m.family_switches = trace.family_switches;
  return m;
}

namespace detail {

// Tie-break at equal timestamps follows declaration order of EventType.
struct QueuedEvent {
  double time;
  EventType type;
  std::uint64_t seq;
  std::uint64_t ref;

  bool operator>(const QueuedEvent& o) const {
    if (time != o.time) return time > o.time;
    if (type != o.type) return static_cast<int>(type) > static_cast<int>(o.type);
    return seq > o.seq;
  }
};

struct FrameSnapshot {
  double capture_time;
  Pose camera_from_marker;
  Vec3 position;
  double yaw;
  MarkerConfig displayed;
};

struct InFlight {
  MarkerCommand command;
  UpdatePlan plan;
};

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg)
      : cfg_(cfg),
        noise_rng_(cfg.seed),
        delay_rng_(cfg.seed ^ 0x9e3779b97f4a7c15ULL),
        delays_(cfg.effective_delays()),
        conditions_(evaluate_conditions(delays_)),
        desired_(desired_pose(cfg.desired_height, cfg.desired_yaw)) {
    cfg_.validate();
  }

  SimTrace run() {
    state_.pose = downward_camera(cfg_.initial_position, cfg_.initial_yaw);
    trace_.initial_state = state_;
    trace_.desired_yaw = cfg_.desired_yaw;
    trace_.landing_trigger_time = cfg_.landing_trigger_time;

    // Pre-flight: screen and detector agree on the first marker.
    MarkerConfig first;
    switch (cfg_.strategy) {
      case Strategy::Dynamic:
        first = select_marker(std::nullopt, cfg_.policy, cfg_.camera, cfg_.screen, cfg_.families, std::nullopt, 0.0)
                    ->new_config;
        break;
      case Strategy::StaticFullPose:
        first = make_config(1, cfg_.families.full_pose, cfg_.screen.limit(), {}, cfg_.screen);
        break;
      case Strategy::StaticLongRange:
        first = make_config(1, cfg_.families.long_range, cfg_.screen.limit(), {}, cfg_.screen);
        break;
    }
    displayed_ = first;
    detector_ = DetectorParams{first, cfg_.camera};
    log(0.0, EventType::Display, first.config_id);

    push(0.0, EventType::Capture, 0);
    while (!queue_.empty()) {
      const QueuedEvent ev = queue_.top();
      if (ev.time > cfg_.duration) break;
      queue_.pop();
      if (!advance_to(ev.time)) break;
      handle(ev);
    }
    if (!finished_) advance_to(cfg_.duration);
    trace_.final_state = state_;
    return std::move(trace_);
  }

 private:
  void push(double t, EventType type, std::uint64_t ref) { queue_.push(QueuedEvent{t, type, seq_++, ref}); }

  void log(double t, EventType type, std::uint64_t id) { trace_.events.push_back(EventRecord{t, type, id}); }

  // Integrates the vehicle up to `t`; false once the run has ended.
  bool advance_to(double t) {
    if (finished_) return false;
    while (state_.time < t) {
      const double dt = std::min(cfg_.tick, t - state_.time);
      if (cfg_.command_lag > 0.0) {
        const double a = 1.0 - std::exp(-dt / cfg_.command_lag);
        applied_.linear += a * (command_.linear - applied_.linear);
        applied_.angular += a * (command_.angular - applied_.angular);
      } else {
        applied_ = command_;
      }
      state_ = vehicle_step(state_, applied_, dt);
      if (state_.time > t) state_.time = t;
      const Vec3& p = state_.pose.translation;
      if (p.z() <= cfg_.touchdown_height) {
        trace_.status = RunStatus::Landed;
        trace_.touchdown_time = state_.time;
        finished_ = true;
        return false;
      }
      if (std::abs(p.x()) > cfg_.bounds || std::abs(p.y()) > cfg_.bounds || p.z() > cfg_.bounds ||
          !p.allFinite()) {
        trace_.status = RunStatus::Diverged;
        finished_ = true;
        return false;
      }
    }
    return true;
  }

  bool landing(double now) const { return cfg_.landing_trigger_time && now >= *cfg_.landing_trigger_time; }

  void handle(const QueuedEvent& ev) {
    switch (ev.type) {
      case EventType::Capture: on_capture(ev); break;
      case EventType::EstimateReady: on_ready(ev); break;
      case EventType::Display:
        displayed_ = in_flight_->command.new_config;
        log(ev.time, ev.type, displayed_.config_id);
        break;
      case EventType::Confirmation: log(ev.time, ev.type, in_flight_->command.new_config.config_id); break;
      case EventType::DetectorUpdate:
        detector_ = apply_update(detector_, in_flight_->command);
        log(ev.time, ev.type, detector_.believed_config.config_id);
        break;
      case EventType::UpdateComplete:
        log(ev.time, ev.type, in_flight_->command.new_config.config_id);
        in_flight_.reset();
        break;
      case EventType::CommandIssued: break;
    }
  }

  void on_capture(const QueuedEvent& ev) {
    const std::uint64_t k = ev.ref;
    const Pose camera_from_marker = invert(state_.pose);
    snapshots_.emplace(k, FrameSnapshot{ev.time, camera_from_marker, state_.pose.translation, state_.yaw(), displayed_});
    const double latency = delays_.d_video.sample(delay_rng_) + delays_.d_pose.sample(delay_rng_);
    push(ev.time + latency, EventType::EstimateReady, k);
    push(static_cast<double>(k + 1) * cfg_.camera.frame_period, EventType::Capture, k + 1);
  }

  void on_ready(const QueuedEvent& ev) {
    const double now = ev.time;
    auto node = snapshots_.extract(ev.ref);
    const FrameSnapshot& snap = node.mapped();

    TraceRecord rec;
    rec.time = now;
    rec.capture_time = snap.capture_time;
    rec.true_position = snap.position;
    rec.true_yaw = snap.yaw;
    rec.frame_config_id = snap.displayed.config_id;
    rec.detector_config_id = detector_.believed_config.config_id;
    rec.displayed_family = snap.displayed.family.kind;
    rec.displayed_size = snap.displayed.marker_size;
    rec.displayed_cells = static_cast<int>(snap.displayed.board.size());

    const Detection det = simulate_detection(snap.camera_from_marker, snap.displayed, detector_, noise_rng_,
                                             snap.capture_time);
    std::optional<PoseEstimate> valid;
    if (det.detected()) {
      const ValidityStamp stamp =
          stamp_validity(now, snap.displayed.config_id, det.estimate->computed_against,
                         in_flight_ ? std::optional<UpdatePlan>(in_flight_->plan) : std::nullopt);
      rec.stamp = stamp;
      rec.est_translation = det.estimate->relative_pose.translation;
      rec.est_yaw = det.estimate->yaw;
      if (stamp.valid) valid = det.estimate;
    } else {
      rec.dropout = det.dropout;
    }

    update_command(valid, now);
    if (cfg_.strategy == Strategy::Dynamic) update_marker(valid, now);

    rec.command = command_;
    trace_.records.push_back(rec);
  }

  void update_command(const std::optional<PoseEstimate>& valid, double now) {
    const bool descending = landing(now);
    if (valid) {
      last_valid_time_ = now;
      // Estimated height above the marker: depth of the marker center.
      if (descending && valid->relative_pose.translation.z() < cfg_.commit_height) committed_ = true;
      command_ = servo_command(*valid, desired_, cfg_.servo, descending, now);
      return;
    }
    const bool lost = !last_valid_time_ || now - *last_valid_time_ > cfg_.target_timeout;
    if (committed_) {
      command_ = VelocityCommand{Vec3{0.0, 0.0, cfg_.servo.descent_rate}, Vec3::Zero(), now};
    } else if (lost) {
      command_ = VelocityCommand{Vec3::Zero(), Vec3::Zero(), now};
    }
  }

  void update_marker(const std::optional<PoseEstimate>& valid, double now) {
    if (in_flight_) {
      if (valid) {
        auto cmd = select_marker(valid, cfg_.policy, cfg_.camera, cfg_.screen, cfg_.families,
                                 in_flight_->command.new_config, now);
        if (cmd) queued_ = cmd;
      }
      return;
    }
    std::optional<MarkerCommand> cmd;
    if (valid) cmd = select_marker(valid, cfg_.policy, cfg_.camera, cfg_.screen, cfg_.families, displayed_, now);
    if (!cmd && queued_ && queued_->new_config.config_id == displayed_.config_id + 1) cmd = queued_;
    queued_.reset();
    if (cmd) dispatch(*cmd, now);
  }

  void dispatch(MarkerCommand cmd, double now) {
    cmd.issued_at = now;
    const UpdateTimeline tl = schedule_update(now, delays_.sample(delay_rng_));
    const UpdatePlan plan = plan_update(tl, cfg_.scheme, conditions_, delays_.safety());
    if (cmd.new_config.family.kind != displayed_.family.kind) ++trace_.family_switches;
    ++trace_.marker_updates;
    const std::uint64_t id = cmd.new_config.config_id;
    in_flight_ = InFlight{std::move(cmd), plan};
    log(now, EventType::CommandIssued, id);
    push(tl.tb, EventType::Display, id);
    push(tl.tc, EventType::Confirmation, id);
    push(plan.detector_commit, EventType::DetectorUpdate, id);
    push(plan.completes_at, EventType::UpdateComplete, id);
  }

  ScenarioConfig cfg_;
  std::mt19937_64 noise_rng_;
  std::mt19937_64 delay_rng_;
  DelayModel delays_;
  OptimizationConditions conditions_;
  Pose desired_;

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::map<std::uint64_t, FrameSnapshot> snapshots_;

  VehicleState state_;
  VelocityCommand command_;
  VelocityCommand applied_;
  MarkerConfig displayed_;
  DetectorParams detector_;
  std::optional<InFlight> in_flight_;
  std::optional<MarkerCommand> queued_;
  std::optional<double> last_valid_time_;
  bool committed_ = false;
  bool finished_ = false;
  SimTrace trace_;
};

}  // namespace detail

/// Closed-loop run of the coupled servo and marker loops. Identical configs
/// give identical traces.
inline SimTrace run_scenario(const ScenarioConfig& config) { return detail::Simulation(config).run(); }

}  // namespace dynmarker
