#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "dynmarker/sim_engine.hpp"

namespace dynmarker {

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

// Column order of the trace CSV. Times in seconds, positions and sizes in
// meters, angles in radians, commands in m/s and rad/s (camera frame).
inline constexpr const char* kTraceHeader =
    "time,capture_time,true_x,true_y,true_z,true_yaw,outcome,validity,est_x,est_y,est_z,est_yaw,"
    "frame_config_id,detector_config_id,displayed_family,displayed_size,board_cells,"
    "cmd_vx,cmd_vy,cmd_vz,cmd_wx,cmd_wy,cmd_wz";

inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  using detail::num;
  os << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    os << num(r.time) << ',' << num(r.capture_time) << ',' << num(r.true_position.x()) << ','
       << num(r.true_position.y()) << ',' << num(r.true_position.z()) << ',' << num(r.true_yaw) << ',';
    if (r.dropout) {
      os << to_string(*r.dropout) << ",,,,,,";
    } else {
      os << "detected," << to_string(r.stamp->reason) << ',' << num(r.est_translation.x()) << ','
         << num(r.est_translation.y()) << ',' << num(r.est_translation.z()) << ','
         << (r.est_yaw ? num(*r.est_yaw) : std::string()) << ',';
    }
    os << r.frame_config_id << ',' << r.detector_config_id << ',' << to_string(r.displayed_family) << ','
       << num(r.displayed_size) << ',' << r.displayed_cells << ',' << num(r.command.linear.x()) << ','
       << num(r.command.linear.y()) << ',' << num(r.command.linear.z()) << ',' << num(r.command.angular.x())
       << ',' << num(r.command.angular.y()) << ',' << num(r.command.angular.z()) << '\n';
  }
}

inline void write_events_csv(std::ostream& os, const SimTrace& trace) {
  os << "time,event,config_id\n";
  for (const auto& e : trace.events) os << detail::num(e.time) << ',' << to_string(e.type) << ',' << e.config_id << '\n';
}

inline nlohmann::ordered_json summary_json(const SummaryMetrics& m) {
  nlohmann::ordered_json j;
  j["status"] = std::string(to_string(m.status));
  j["final_lateral_error_m"] = m.final_lateral_error;
  j["initial_yaw_error_rad"] = m.initial_yaw_error;
  j["final_yaw_error_rad"] = m.final_yaw_error;
  j["time_to_land_s"] = m.time_to_land ? nlohmann::ordered_json(*m.time_to_land) : nlohmann::ordered_json(nullptr);
  j["frames"] = m.frames;
  j["detections"] = m.detections;
  j["dropouts"] = m.dropouts;
  j["invalidated_frames"] = m.invalidated_frames;
  j["marker_updates"] = m.marker_updates;
  j["family_switches"] = m.family_switches;
  j["first_full_pose_time_s"] =
      m.first_full_pose_time ? nlohmann::ordered_json(*m.first_full_pose_time) : nlohmann::ordered_json(nullptr);
  j["max_detection_height_m"] = m.max_detection_height;
  return j;
}

}  // namespace dynmarker
