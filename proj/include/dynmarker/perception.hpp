#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "dynmarker/errors.hpp"
#include "dynmarker/geometry.hpp"
#include "dynmarker/marker_model.hpp"

namespace dynmarker {

/// What the feature detector currently believes: a(t).
struct DetectorParams {
  MarkerConfig believed_config;
  CameraIntrinsics intrinsics;
};

struct PoseEstimate {
  Pose relative_pose;          // F_m -> F_c
  std::optional<double> yaw;   // camera yaw about the marker normal, full-pose families only
  std::uint64_t computed_against = 0;
  double capture_time = 0.0;
  double position_sigma = 0.0;
  int visible_cells = 0;

  double distance() const { return relative_pose.translation.norm(); }
};

enum class Dropout { OutOfRange, TooSmall, OutOfView, FamilyMismatch };

constexpr std::string_view to_string(Dropout d) {
  switch (d) {
    case Dropout::OutOfRange: return "out-of-range";
    case Dropout::TooSmall: return "too-small";
    case Dropout::OutOfView: return "out-of-view";
    case Dropout::FamilyMismatch: return "family-mismatch";
  }
  return "?";
}

struct Detection {
  std::optional<PoseEstimate> estimate;
  Dropout dropout = Dropout::OutOfView;

  bool detected() const { return estimate.has_value(); }
};

namespace detail {

inline std::array<Vec3, 4> square_corners(const Vec2& center, double size) {
  const double h = 0.5 * size;
  return {Vec3{center.x() - h, center.y() - h, 0.0}, Vec3{center.x() + h, center.y() - h, 0.0},
          Vec3{center.x() + h, center.y() + h, 0.0}, Vec3{center.x() - h, center.y() + h, 0.0}};
}

}  // namespace detail

/// Longest projected edge of a centered square marker, in pixels.
inline double pixel_footprint(const Pose& camera_from_marker, double marker_size, const CameraIntrinsics& k) {
  std::array<Vec2, 4> px;
  const auto corners = detail::square_corners(Vec2::Zero(), marker_size);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const Vec3 p = camera_from_marker.apply(corners[i]);
    if (!(p.z() > 0.0)) throw GeometryError("pixel_footprint: marker behind the camera");
    px[i] = Vec2{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
  }
  double edge = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) edge = std::max(edge, (px[(i + 1) % 4] - px[i]).norm());
  return edge;
}

/// Stand-in for image processing. `true_pose` maps F_m to F_c; `displayed`
/// is what the camera sees; `detector` holds the believed model. A believed
/// size that differs from the displayed one scales the translation by
/// believed/displayed, the way a real PnP solve would.
inline Detection simulate_detection(const Pose& true_pose, const MarkerConfig& displayed,
                                    const DetectorParams& detector, std::mt19937_64& rng,
                                    double capture_time = 0.0) {
  const auto& family = displayed.family;
  const auto& k = detector.intrinsics;
  const double distance = true_pose.translation.norm();

  if (distance > family.max_detection_range) return Detection{std::nullopt, Dropout::OutOfRange};

  for (const auto& c : detail::square_corners(Vec2::Zero(), displayed.marker_size)) {
    if (!(true_pose.apply(c).z() > 0.0)) return Detection{std::nullopt, Dropout::OutOfView};
  }
  if (pixel_footprint(true_pose, displayed.marker_size, k) < family.min_pixel_footprint) {
    return Detection{std::nullopt, Dropout::TooSmall};
  }

  int visible = 0;
  for (const auto& cell : displayed.board) {
    bool all_in = true;
    for (const auto& c : detail::square_corners(cell.center, cell.size)) {
      if (!project_point(true_pose.apply(c), k).in_view()) {
        all_in = false;
        break;
      }
    }
    if (all_in) ++visible;
  }
  if (visible == 0) return Detection{std::nullopt, Dropout::OutOfView};

  if (detector.believed_config.family.kind != family.kind) {
    return Detection{std::nullopt, Dropout::FamilyMismatch};
  }

  const double scale = detector.believed_config.marker_size / displayed.marker_size;
  const double sigma = family.position_noise.sigma(distance) / std::sqrt(static_cast<double>(visible));

  Vec3 t = scale * true_pose.translation;
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    for (int i = 0; i < 3; ++i) t[i] += n(rng);
  }

  // Rotation split as Rz(yaw) * Q in the marker frame; position-only
  // families keep Q (marker normal) and report yaw 0.
  const Mat3 marker_from_camera = true_pose.rotation.transpose();
  const double true_yaw = yaw_of(marker_from_camera);
  const Mat3 tilt = rot_z(-true_yaw) * marker_from_camera;

  std::optional<double> yaw;
  double est_yaw = 0.0;
  if (family.yields_yaw) {
    est_yaw = true_yaw;
    if (family.yaw_noise) {
      const double ys = family.yaw_noise->sigma(distance) / std::sqrt(static_cast<double>(visible));
      if (ys > 0.0) est_yaw += std::normal_distribution<double>(0.0, ys)(rng);
    }
    yaw = est_yaw;
  }
  const Mat3 est_rotation =
      family.yields_yaw && est_yaw == true_yaw ? true_pose.rotation : (rot_z(est_yaw) * tilt).transpose();

  PoseEstimate est;
  est.relative_pose = Pose{est_rotation, t, Frame::Marker, Frame::Camera};
  est.yaw = yaw;
  est.computed_against = detector.believed_config.config_id;
  est.capture_time = capture_time;
  est.position_sigma = sigma;
  est.visible_cells = visible;
  return Detection{est, Dropout::OutOfView};
}

}  // namespace dynmarker
