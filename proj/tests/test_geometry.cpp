#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dynmarker/geometry.hpp"

using namespace dynmarker;
using std::numbers::pi;

namespace {

Mat3 random_rotation(std::mt19937_64& rng, double max_angle = pi) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> a(0.0, max_angle);
  return angle_axis_to_rotation(AngleAxis{Vec3{n(rng), n(rng), n(rng)}.normalized(), a(rng)});
}

Pose random_pose(std::mt19937_64& rng, Frame from, Frame to) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  return Pose{random_rotation(rng), Vec3{u(rng), u(rng), u(rng)}, from, to};
}

void expect_pose_near(const Pose& a, const Pose& b, double tol) {
  EXPECT_LT((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LT((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
  EXPECT_EQ(a.from, b.from);
  EXPECT_EQ(a.to, b.to);
}

}  // namespace

TEST(Compose, IdentityIsNeutral) {
  std::mt19937_64 rng(1);
  const Pose p = random_pose(rng, Frame::Camera, Frame::Marker);
  expect_pose_near(compose(p, Pose::identity(Frame::Camera)), p, 1e-15);
}

TEST(Compose, InverseGivesIdentity) {
  std::mt19937_64 rng(2);
  const Pose p = random_pose(rng, Frame::Camera, Frame::Marker);
  expect_pose_near(compose(p, invert(p)), Pose::identity(Frame::Marker), 1e-12);
}

TEST(Compose, RotatedTranslation) {
  // a = (Rz(pi/2), (1,0,0)), b = (I, (1,0,0)): Rz(pi/2)*(1,0,0) + (1,0,0) = (0,1,0) + (1,0,0).
  const Pose a{rot_z(pi / 2), Vec3{1, 0, 0}, Frame::Camera, Frame::Marker};
  const Pose b{Mat3::Identity(), Vec3{1, 0, 0}, Frame::Camera, Frame::Camera};
  const Pose c = compose(a, b);
  EXPECT_NEAR(c.translation.x(), 1.0, 1e-15);
  EXPECT_NEAR(c.translation.y(), 1.0, 1e-15);
  EXPECT_NEAR(c.translation.z(), 0.0, 1e-15);
}

TEST(Compose, FrameMismatchNamesBothFrames) {
  const Pose a{Mat3::Identity(), Vec3::Zero(), Frame::Camera, Frame::Marker};
  const Pose b{Mat3::Identity(), Vec3::Zero(), Frame::Camera, Frame::DesiredCamera};
  try {
    compose(a, b);
    FAIL() << "expected GeometryError";
  } catch (const GeometryError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("F_c"), std::string::npos);
    EXPECT_NE(what.find("F_c*"), std::string::npos);
  }
}

TEST(Compose, Associative) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng, Frame::Camera, Frame::Marker);
    const Pose b = random_pose(rng, Frame::DesiredCamera, Frame::Camera);
    const Pose c = random_pose(rng, Frame::Marker, Frame::DesiredCamera);
    expect_pose_near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12);
  }
}

TEST(Compose, ResultStaysOrthonormal) {
  std::mt19937_64 rng(4);
  Pose acc = Pose::identity(Frame::Marker);
  for (int i = 0; i < 1000; ++i) acc = compose(random_pose(rng, Frame::Marker, Frame::Marker), acc);
  EXPECT_TRUE(is_rotation(acc.rotation, 1e-9));
}

TEST(AngleAxisTest, Identity) {
  EXPECT_EQ(rotation_to_angle_axis(Mat3::Identity()).angle, 0.0);
}

TEST(AngleAxisTest, QuarterTurnAboutZ) {
  const AngleAxis aa = rotation_to_angle_axis(rot_z(pi / 2));
  EXPECT_NEAR(aa.angle, pi / 2, 1e-12);
  EXPECT_NEAR((aa.axis - Vec3::UnitZ()).norm(), 0.0, 1e-12);
}

TEST(AngleAxisTest, HalfTurnAboutXHasPositiveAxis) {
  const AngleAxis aa = rotation_to_angle_axis(rot_x(pi));
  EXPECT_NEAR(aa.angle, pi, 1e-12);
  EXPECT_NEAR((aa.axis - Vec3::UnitX()).norm(), 0.0, 1e-12);
  const AngleAxis bb = rotation_to_angle_axis(rot_x(-pi));
  EXPECT_NEAR((bb.axis - Vec3::UnitX()).norm(), 0.0, 1e-12);
}

TEST(AngleAxisTest, RejectsNonOrthonormal) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = 1.01;
  EXPECT_THROW(rotation_to_angle_axis(m), GeometryError);
}

TEST(AngleAxisTest, RoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Mat3 r = random_rotation(rng);
    const Mat3 back = angle_axis_to_rotation(rotation_to_angle_axis(r));
    EXPECT_LT((back - r).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(AngleAxisTest, RoundTripNearPi) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = Vec3{n(rng), n(rng), n(rng)}.normalized();
    const double angle = pi - 1e-7 * (i % 7);
    const Mat3 r = angle_axis_to_rotation(AngleAxis{axis, angle});
    const AngleAxis aa = rotation_to_angle_axis(r);
    EXPECT_NEAR(aa.angle, angle, 1e-7);
    EXPECT_LT((angle_axis_to_rotation(aa) - r).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(AngleAxisTest, AngleInRange) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const AngleAxis aa = rotation_to_angle_axis(random_rotation(rng));
    EXPECT_GE(aa.angle, 0.0);
    EXPECT_LE(aa.angle, pi);
    EXPECT_NEAR(aa.axis.norm(), 1.0, 1e-12);
  }
}

TEST(Projection, OpticalAxisHitsPrincipalPoint) {
  CameraIntrinsics k;
  k.fx = k.fy = 500;
  k.cx = 320;
  k.cy = 240;
  k.width = 640;
  k.height = 480;
  const Projection p = project_point(Vec3{0, 0, 2}, k);
  ASSERT_TRUE(p.in_view());
  EXPECT_DOUBLE_EQ(p.pixel.x(), 320.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 240.0);
}

TEST(Projection, PinholeFormula) {
  CameraIntrinsics k;
  k.fx = k.fy = 500;
  k.cx = 320;
  k.cy = 240;
  k.width = 640;
  k.height = 480;
  // 500 * 0.1 / 1 + 320
  EXPECT_NEAR(project_point(Vec3{0.1, 0, 1}, k).pixel.x(), 370.0, 1e-12);
}

TEST(Projection, BehindCamera) {
  const Projection p = project_point(Vec3{0, 0, -1}, CameraIntrinsics{});
  ASSERT_TRUE(p.out_of_view);
  EXPECT_EQ(*p.out_of_view, OutOfView::BehindCamera);
}

TEST(Projection, OutsideFrame) {
  const Projection p = project_point(Vec3{10, 0, 1}, CameraIntrinsics{});
  ASSERT_TRUE(p.out_of_view);
  EXPECT_EQ(*p.out_of_view, OutOfView::OutsideFrame);
}

TEST(Projection, ScaleInvariantAlongRay) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0), d(0.1, 10.0), s(0.1, 10.0);
  const CameraIntrinsics k;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{u(rng), u(rng), d(rng)};
    const double scale = s(rng);
    EXPECT_LT((project_point(p, k).pixel - project_point(scale * p, k).pixel).norm(), 1e-9);
  }
}

TEST(FieldOfView, WidthLimited) {
  CameraIntrinsics k;
  k.fx = k.fy = 500;
  k.width = k.height = 640;
  k.cx = k.cy = 320;
  EXPECT_NEAR(fov_half_angle(k), std::atan(640.0 / 1000.0), 1e-15);
  EXPECT_NEAR(fov_half_angle(k), 0.5693, 1e-4);
}

TEST(FieldOfView, UnitTangent) {
  CameraIntrinsics k;
  k.fx = k.fy = 320;
  k.width = k.height = 640;
  k.cx = k.cy = 320;
  EXPECT_NEAR(fov_half_angle(k), pi / 4, 1e-15);
}

TEST(FieldOfView, HeightLimited) {
  CameraIntrinsics k;
  k.fx = k.fy = 500;
  k.width = 640;
  k.height = 480;
  k.cx = 320;
  k.cy = 240;
  EXPECT_NEAR(fov_half_angle(k), std::atan(480.0 / 1000.0), 1e-15);
  EXPECT_NEAR(fov_half_angle(k), 0.4475, 1e-4);
}

TEST(Orthonormalize, RepairsDrift) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1e-4);
  for (int i = 0; i < 100; ++i) {
    Mat3 r = random_rotation(rng);
    for (int j = 0; j < 9; ++j) r.data()[j] += n(rng);
    EXPECT_TRUE(is_rotation(orthonormalize(r), 1e-12));
  }
}
