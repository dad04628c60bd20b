#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "dynmarker/errors.hpp"

namespace dynmarker {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Marker frame: origin at the screen center, z out of the screen.
// Camera frames: z along the optical axis, x right, y down in the image.
enum class Frame { Marker, Camera, DesiredCamera };

constexpr std::string_view frame_name(Frame f) {
  switch (f) {
    case Frame::Marker: return "F_m";
    case Frame::Camera: return "F_c";
    case Frame::DesiredCamera: return "F_c*";
  }
  return "?";
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

inline double orthonormality_error(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return r.allFinite() && orthonormality_error(r) <= tol;
}

// Nearest rotation in the Frobenius sense.
inline Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

/// Rigid transform taking coordinates expressed in `from` to coordinates in
/// `to`: p_to = rotation * p_from + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Frame from = Frame::Marker;
  Frame to = Frame::Marker;

  static Pose identity(Frame f) { return Pose{Mat3::Identity(), Vec3::Zero(), f, f}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

inline Pose compose(const Pose& a, const Pose& b) {
  if (a.from != b.to) {
    throw GeometryError("compose: frame mismatch, left expects " + std::string(frame_name(a.from)) +
                        " but right produces " + std::string(frame_name(b.to)));
  }
  return Pose{a.rotation * b.rotation, a.rotation * b.translation + a.translation, b.from, a.to};
}

inline Pose invert(const Pose& p) {
  const Mat3 rt = p.rotation.transpose();
  return Pose{rt, -rt * p.translation, p.to, p.from};
}

struct AngleAxis {
  Vec3 axis = Vec3::UnitZ();
  double angle = 0.0;

  Vec3 rotation_vector() const { return angle * axis; }
};

inline Mat3 angle_axis_to_rotation(const AngleAxis& aa) {
  return Eigen::AngleAxisd(aa.angle, aa.axis.normalized()).toRotationMatrix();
}

// Rotation by the vector `w` (axis * angle); exact exponential map.
inline Mat3 exp_so3(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

namespace detail {

inline void canonicalize_sign(Vec3& axis) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-12) {
      if (axis[i] < 0.0) axis = -axis;
      return;
    }
  }
}

}  // namespace detail

/// Angle in [0, pi]. Angle 0 maps to axis (0,0,1); at angle pi the axis is
/// sign-canonicalized so its first nonzero component is positive.
inline AngleAxis rotation_to_angle_axis(const Mat3& r) {
  if (!r.allFinite() || orthonormality_error(r) > 1e-6) {
    throw GeometryError("rotation_to_angle_axis: input is not a proper rotation");
  }
  const Vec3 vee{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  const double sin_a = 0.5 * vee.norm();
  const double cos_a = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double angle = std::atan2(sin_a, cos_a);

  if (angle < 1e-12) return AngleAxis{Vec3::UnitZ(), 0.0};

  if (angle < 0.75 * std::numbers::pi) return AngleAxis{vee / (2.0 * sin_a), angle};

  // Near pi the skew part vanishes; read the axis off the symmetric part,
  // uu^T = (R + R^T - 2cos I) / (2(1 - cos)).
  const Mat3 uut = (r + r.transpose() - 2.0 * cos_a * Mat3::Identity()) / (2.0 * (1.0 - cos_a));
  Eigen::Index k = 0;
  uut.diagonal().maxCoeff(&k);
  Vec3 axis = uut.col(k) / std::sqrt(std::max(uut(k, k), 1e-300));
  axis.normalize();
  if (vee.norm() > 1e-9) {
    if (axis.dot(vee) < 0.0) axis = -axis;
  } else {
    detail::canonicalize_sign(axis);
  }
  return AngleAxis{axis, angle};
}

/// Yaw of a rotation about its z axis, ZYX convention.
inline double yaw_of(const Mat3& r) { return std::atan2(r(1, 0), r(0, 0)); }

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

/// Ideal pinhole camera. frame_period is the frame grab delay.
struct CameraIntrinsics {
  double fx = 400.0;
  double fy = 400.0;
  double cx = 320.0;
  double cy = 180.0;
  double width = 640.0;
  double height = 360.0;
  double frame_period = 0.033;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw DomainError("CameraIntrinsics: focal lengths must be positive");
    if (!(cx > 0.0 && cx < width)) throw DomainError("CameraIntrinsics: cx outside (0, width)");
    if (!(cy > 0.0 && cy < height)) throw DomainError("CameraIntrinsics: cy outside (0, height)");
    if (!(frame_period > 0.0)) throw DomainError("CameraIntrinsics: frame_period must be positive");
  }
};

enum class OutOfView { BehindCamera, OutsideFrame };

constexpr std::string_view to_string(OutOfView r) {
  return r == OutOfView::BehindCamera ? "behind-camera" : "outside-frame";
}

struct Projection {
  Vec2 pixel = Vec2::Zero();
  std::optional<OutOfView> out_of_view;

  bool in_view() const { return !out_of_view.has_value(); }
};

inline Projection project_point(const Vec3& p, const CameraIntrinsics& k) {
  if (!(p.z() > 0.0)) return Projection{Vec2::Zero(), OutOfView::BehindCamera};
  const Vec2 px{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
  if (px.x() < 0.0 || px.x() > k.width || px.y() < 0.0 || px.y() > k.height) {
    return Projection{px, OutOfView::OutsideFrame};
  }
  return Projection{px, std::nullopt};
}

/// Half field of view, limited by the narrower image axis.
inline double fov_half_angle(const CameraIntrinsics& k) {
  return std::min(std::atan(k.width / (2.0 * k.fx)), std::atan(k.height / (2.0 * k.fy)));
}

}  // namespace dynmarker
