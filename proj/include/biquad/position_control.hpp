#pragma once

// Outer position loop: PD force law, projection onto the body z axis, and
// construction of the desired attitude from thrust direction and heading.

#include "biquad/params.hpp"
#include "biquad/rigid_body.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace biquad {

struct ReferenceSignal {
  Vec3 p_d = Vec3::Zero();  // m
  Vec3 v_d = Vec3::Zero();  // m/s
  Vec3 a_d = Vec3::Zero();  // m/s^2
  double psi = 0.0;         // heading (rad)
};

struct DesiredAttitude {
  Mat3 R_c = Mat3::Identity();
  Quaternion q_c;  // scalar part >= 0
};

/// Raised when the thrust direction or heading leaves the desired attitude
/// undefined.
class DegenerateAttitudeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kMinDesiredForce = 1e-6;      // N
inline constexpr double kMinHeadingCrossNorm = 1e-6;

/// F_des = -k_p (p - p_d) - k_d (v - v_d) + m g e3 + m a_d, inertial frame.
inline Vec3 position_law(const RigidBodyState& s, const ReferenceSignal& ref,
                         const ControllerGains& gains, const VehicleParams& params) {
  return -gains.k_p * (s.p - ref.p_d) - gains.k_d * (s.v - ref.v_d) +
         params.m * params.g * Vec3::UnitZ() + params.m * ref.a_d;
}

/// Body-z force that realizes F_des once the lateral body force Fx_body is
/// accounted for.
inline double project_fz(const Vec3& F_des, const Mat3& R, double Fx_body) {
  return (F_des - R * (Fx_body * Vec3::UnitX())).dot(R * Vec3::UnitZ());
}

inline DesiredAttitude desired_attitude(const Vec3& F_des, double psi) {
  const double f = F_des.norm();
  if (!(f > kMinDesiredForce)) {
    throw DegenerateAttitudeError("desired force too small to define a thrust direction");
  }
  const Vec3 z_bd = F_des / f;
  const Vec3 x_bc(std::cos(psi), std::sin(psi), 0.0);
  const Vec3 y_raw = z_bd.cross(x_bc);
  const double yn = y_raw.norm();
  if (!(yn > kMinHeadingCrossNorm)) {
    throw DegenerateAttitudeError("heading vector is parallel to the desired thrust direction");
  }
  const Vec3 y_bd = y_raw / yn;
  const Vec3 x_bd = y_bd.cross(z_bd);

  DesiredAttitude d;
  d.R_c.col(0) = x_bd;
  d.R_c.col(1) = y_bd;
  d.R_c.col(2) = z_bd;
  d.q_c = rotmat_to_quat(d.R_c);
  return d;
}

inline constexpr double kCircleRadius = 4.0;            // m
inline constexpr double kCircleHeight = 4.0;            // m
inline constexpr double kCircleRate = std::numbers::pi / 4.0;  // rad/s
inline constexpr double kCircleHeading = std::numbers::pi / 6.0;

/// p_d(t) = (4 cos(pi t / 4), 4 sin(pi t / 4), 4) at constant heading pi/6,
/// with exact first and second derivatives.
inline ReferenceSignal circle_reference(double t) {
  const double c = std::cos(kCircleRate * t), s = std::sin(kCircleRate * t);
  const double r = kCircleRadius, w = kCircleRate;
  ReferenceSignal ref;
  ref.p_d = {r * c, r * s, kCircleHeight};
  ref.v_d = {-r * w * s, r * w * c, 0.0};
  ref.a_d = {-r * w * w * c, -r * w * w * s, 0.0};
  ref.psi = kCircleHeading;
  return ref;
}

}  // namespace biquad
