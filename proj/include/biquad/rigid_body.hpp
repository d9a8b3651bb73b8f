#pragma once

// Quaternion/rotation helpers and the Newton-Euler rigid-body model.
//
// Conventions: Hamilton product, scalar-first, q maps body -> inertial,
// angular velocity w is expressed in the body frame and enters the
// kinematics by right multiplication, q_dot = 1/2 q (x) (0, w).
// The inertial frame is North-West-Up, so gravity acts along -e3.

#include "biquad/params.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace biquad {

struct Quaternion {
  double w = 1.0;
  Vec3 v = Vec3::Zero();

  Quaternion() = default;
  Quaternion(double scalar, const Vec3& vec) : w(scalar), v(vec) {}
  Quaternion(double q0, double q1, double q2, double q3) : w(q0), v(q1, q2, q3) {}

  static Quaternion identity() { return {}; }
  static Quaternion pure(const Vec3& x) { return {0.0, x}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle) {
    return {std::cos(0.5 * angle), std::sin(0.5 * angle) * axis.normalized()};
  }

  double norm() const { return std::sqrt(w * w + v.squaredNorm()); }

  Quaternion operator+(const Quaternion& o) const { return {w + o.w, v + o.v}; }
  Quaternion operator-(const Quaternion& o) const { return {w - o.w, v - o.v}; }
  Quaternion operator*(double s) const { return {w * s, v * s}; }
  Quaternion operator-() const { return {-w, -v}; }

  bool operator==(const Quaternion&) const = default;
};

inline Quaternion operator*(double s, const Quaternion& q) { return q * s; }

/// Skew-symmetric matrix with hat(w) * x == w.cross(x).
inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

/// Hamilton product a (x) b.
inline Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.v.dot(b.v), a.w * b.v + b.w * a.v + a.v.cross(b.v)};
}

inline Quaternion quat_conjugate(const Quaternion& q) { return {q.w, -q.v}; }

inline Quaternion quat_normalize(const Quaternion& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("cannot normalize a zero or non-finite quaternion");
  }
  return q * (1.0 / n);
}

inline constexpr double kUnitQuaternionTolerance = 1e-6;

inline Mat3 quat_to_rotmat(const Quaternion& q) {
  if (std::abs(q.norm() - 1.0) > kUnitQuaternionTolerance) {
    throw std::invalid_argument("quat_to_rotmat expects a unit quaternion");
  }
  const double w = q.w, x = q.v.x(), y = q.v.y(), z = q.v.z();
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// Rotation matrix to unit quaternion with nonnegative scalar part
/// (Shepperd's method, branch on the largest diagonal term).
inline Quaternion rotmat_to_quat(const Mat3& r) {
  const double trace = r.trace();
  Quaternion q;
  if (trace >= r(0, 0) && trace >= r(1, 1) && trace >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 - r(0, 0) + r(1, 1) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 - r(0, 0) - r(1, 1) + r(2, 2));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0) q = -q;
  return quat_normalize(q);
}

struct RigidBodyState {
  Vec3 p = Vec3::Zero();  // inertial position (m)
  Vec3 v = Vec3::Zero();  // inertial velocity (m/s)
  Quaternion q;           // body -> inertial
  Vec3 w = Vec3::Zero();  // body angular velocity (rad/s)
};

struct StateDerivative {
  Vec3 p_dot = Vec3::Zero();
  Vec3 v_dot = Vec3::Zero();
  Quaternion q_dot{0.0, Vec3::Zero()};
  Vec3 w_dot = Vec3::Zero();
};

/// Body-frame force and torque acting on the vehicle.
struct Wrench {
  Vec3 F = Vec3::Zero();    // N
  Vec3 tau = Vec3::Zero();  // N m
};

inline StateDerivative state_derivative(const RigidBodyState& s, const Wrench& wr,
                                        const VehicleParams& params) {
  // RK4 stages see slightly non-unit quaternions; rotate with the normalized one.
  const Mat3 R = quat_to_rotmat(quat_normalize(s.q));
  const Vec3 Jw = params.J.cwiseProduct(s.w);

  StateDerivative d;
  d.p_dot = s.v;
  d.v_dot = -params.g * Vec3::UnitZ() + R * wr.F / params.m;
  d.q_dot = 0.5 * quat_multiply(s.q, Quaternion::pure(s.w));
  d.w_dot = (-s.w.cross(Jw) + wr.tau).cwiseQuotient(params.J);
  return d;
}

namespace detail {

inline RigidBodyState advance(const RigidBodyState& s, const StateDerivative& d, double h) {
  RigidBodyState out;
  out.p = s.p + h * d.p_dot;
  out.v = s.v + h * d.v_dot;
  out.q = s.q + h * d.q_dot;
  out.w = s.w + h * d.w_dot;
  return out;
}

}  // namespace detail

/// Classical RK4 with the wrench held over the step; q is renormalized after.
inline RigidBodyState rk4_step(const RigidBodyState& s, const Wrench& wr, double dt,
                               const VehicleParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step requires dt > 0");
  const StateDerivative k1 = state_derivative(s, wr, params);
  const StateDerivative k2 = state_derivative(detail::advance(s, k1, 0.5 * dt), wr, params);
  const StateDerivative k3 = state_derivative(detail::advance(s, k2, 0.5 * dt), wr, params);
  const StateDerivative k4 = state_derivative(detail::advance(s, k3, dt), wr, params);

  const double c = dt / 6.0;
  RigidBodyState out;
  out.p = s.p + c * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot);
  out.v = s.v + c * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
  out.q = quat_normalize(s.q + c * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot));
  out.w = s.w + c * (k1.w_dot + 2.0 * k2.w_dot + 2.0 * k3.w_dot + k4.w_dot);
  return out;
}

}  // namespace biquad
