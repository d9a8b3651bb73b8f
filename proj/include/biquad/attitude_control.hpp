#pragma once

/**
 * @file attitude_control.hpp
 * @brief Cascaded quaternion attitude controller.
 *
 * Outer loop: omega_d = -k_p_q * e_err, where e_err is the axis-angle vector
 * of q_e = conj(q_c) (x) q.
 *
 * Inner loop: tau_d = -K_p_w * omega_e - K_d_w * d(omega_e)/dt + omega x J omega
 * with omega_e = omega - omega_d.
 *
 * The derivative of omega_e can be realized two ways (RateDerivative):
 *
 *  - ModelConsistent (default): d(omega_e)/dt = omega_dot - d(omega_d)/dt,
 *    where omega_dot is the body acceleration the commanded torque itself
 *    produces. Substituting the law into J omega_dot = -omega x J omega + tau
 *    gives (J + K_d_w) omega_dot = -K_p_w omega_e + K_d_w d(omega_d)/dt, which
 *    is solved per axis. d(omega_d)/dt is a backward difference.
 *
 *  - BackwardDifference: (omega_e[k] - omega_e[k-1]) / dt. With a one-cycle
 *    delay this closes a discrete loop with a pole at -K_d_w / J, so it
 *    diverges whenever K_d_w > J on any axis (pitch with the default gains).
 *
 * Both return zero derivative contribution from the setpoint on the first
 * cycle.
 */

#include "biquad/params.hpp"
#include "biquad/rigid_body.hpp"

#include <cmath>
#include <stdexcept>

namespace biquad {

struct AttitudeError {
  Vec3 e_err = Vec3::Zero();  // axis * angle (rad)
  double phi = 0.0;           // 2 atan2(|eps_e|, eta_e), in [0, 2 pi]
  double eta_e = 1.0;
  Vec3 eps_e = Vec3::Zero();
};

/// phi / sin(phi / 2), with the small-angle limit 2.
inline double angle_over_half_sine(double phi) {
  if (std::abs(phi) < 1e-6) return 2.0 + phi * phi / 12.0;
  return phi / std::sin(0.5 * phi);
}

inline AttitudeError attitude_error(const Quaternion& q, const Quaternion& q_c) {
  const Quaternion q_e = quat_multiply(quat_conjugate(q_c), q);
  AttitudeError e;
  e.eta_e = q_e.w;
  e.eps_e = q_e.v;
  const double eps_norm = q_e.v.norm();
  e.phi = 2.0 * std::atan2(eps_norm, q_e.w);
  // Shortest-path angle keeps e_err identical for q and -q.
  const double phi_short = 2.0 * std::atan2(eps_norm, std::abs(q_e.w));
  const double sign = q_e.w >= 0.0 ? 1.0 : -1.0;
  e.e_err = sign * angle_over_half_sine(phi_short) * q_e.v;
  return e;
}

inline Vec3 outer_loop(const AttitudeError& e, double k_p_q) { return -k_p_q * e.e_err; }

enum class RateDerivative { ModelConsistent, BackwardDifference };

struct RateLoopState {
  Vec3 prev_omega_e = Vec3::Zero();
  Vec3 prev_omega_d = Vec3::Zero();
  bool initialized = false;
};

struct RateLoopOutput {
  Vec3 tau_d = Vec3::Zero();
  Vec3 omega_e = Vec3::Zero();
  Vec3 omega_e_rate = Vec3::Zero();  // the d(omega_e)/dt that entered tau_d
};

inline RateLoopOutput inner_loop(const Vec3& w, const Vec3& omega_d, RateLoopState& rls,
                                 double dt, const Vec3& J, const ControllerGains& gains,
                                 RateDerivative mode = RateDerivative::ModelConsistent) {
  if (!(dt > 0.0)) throw std::invalid_argument("inner_loop requires dt > 0");
  RateLoopOutput out;
  out.omega_e = w - omega_d;
  const Vec3 gyro = w.cross(J.cwiseProduct(w));
  const Vec3& kp = gains.K_p_w;
  const Vec3& kd = gains.K_d_w;

  if (mode == RateDerivative::BackwardDifference) {
    out.omega_e_rate = rls.initialized ? Vec3((out.omega_e - rls.prev_omega_e) / dt)
                                       : Vec3::Zero();
  } else {
    const Vec3 omega_d_rate =
        rls.initialized ? Vec3((omega_d - rls.prev_omega_d) / dt) : Vec3::Zero();
    const Vec3 omega_dot =
        (-kp.cwiseProduct(out.omega_e) + kd.cwiseProduct(omega_d_rate)).cwiseQuotient(J + kd);
    out.omega_e_rate = omega_dot - omega_d_rate;
  }
  out.tau_d = -kp.cwiseProduct(out.omega_e) - kd.cwiseProduct(out.omega_e_rate) + gyro;

  rls.prev_omega_e = out.omega_e;
  rls.prev_omega_d = omega_d;
  rls.initialized = true;
  return out;
}

}  // namespace biquad
