#pragma once

#include <cmath>

#include "dynmarker/errors.hpp"
#include "dynmarker/geometry.hpp"
#include "dynmarker/perception.hpp"

namespace dynmarker {

/// s = (c*t_c, theta u). With s* = 0 this is also the servo error.
struct FeatureVector {
  Vec3 translation_to_desired = Vec3::Zero();
  AngleAxis rotation_to_desired;
  Mat3 rotation = Mat3::Identity();  // c*R_c the angle-axis was taken from

  double norm() const {
    return std::sqrt(translation_to_desired.squaredNorm() +
                     rotation_to_desired.rotation_vector().squaredNorm());
  }
};

/// Camera-frame twist.
struct VelocityCommand {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
  double stamp = 0.0;

  bool is_zero() const { return linear.isZero(0.0) && angular.isZero(0.0); }
};

/// `desired` maps F_m to F_c*. Without a yaw measurement the rotation error
/// about the desired optical axis is held at zero.
inline FeatureVector compute_error(const PoseEstimate& estimate, const Pose& desired) {
  if (desired.from != Frame::Marker || desired.to != Frame::DesiredCamera) {
    throw GeometryError("compute_error: desired pose must map F_m to F_c*");
  }
  const Pose desired_from_camera = compose(desired, invert(estimate.relative_pose));
  FeatureVector e;
  e.translation_to_desired = desired_from_camera.translation;
  e.rotation = desired_from_camera.rotation;
  e.rotation_to_desired = rotation_to_angle_axis(desired_from_camera.rotation);
  if (!estimate.yaw) {
    Vec3 tu = e.rotation_to_desired.rotation_vector();
    tu.z() = 0.0;
    const double angle = tu.norm();
    e.rotation_to_desired = angle > 0.0 ? AngleAxis{tu / angle, angle} : AngleAxis{};
  }
  return e;
}

/// v = -lambda R^T t, w = -lambda theta u.
inline VelocityCommand control_law(const FeatureVector& e, double lambda, const Mat3& r, double stamp = 0.0) {
  if (!(lambda > 0.0)) throw DomainError("control_law: lambda must be > 0");
  return VelocityCommand{-lambda * r.transpose() * e.translation_to_desired,
                         -lambda * e.rotation_to_desired.rotation_vector(), stamp};
}

inline VelocityCommand clamp_command(VelocityCommand cmd, double max_linear, double max_angular) {
  const double ln = cmd.linear.norm();
  if (max_linear > 0.0 && ln > max_linear) cmd.linear *= max_linear / ln;
  const double an = cmd.angular.norm();
  if (max_angular > 0.0 && an > max_angular) cmd.angular *= max_angular / an;
  return cmd;
}

struct ServoSettings {
  double lambda = 0.8;
  double max_linear = 1.0;   // m/s, <= 0 disables
  double max_angular = 1.0;  // rad/s, <= 0 disables
  double descent_rate = 0.3; // m/s along the optical axis once landing
};

/// One PBVS step: error, law, clamp, and the constant-rate descent override.
inline VelocityCommand servo_command(const PoseEstimate& estimate, const Pose& desired,
                                     const ServoSettings& s, bool landing, double stamp) {
  const FeatureVector e = compute_error(estimate, desired);
  VelocityCommand cmd = clamp_command(control_law(e, s.lambda, e.rotation, stamp), s.max_linear, s.max_angular);
  if (landing) cmd.linear.z() = s.descent_rate;
  return cmd;
}

}  // namespace dynmarker
