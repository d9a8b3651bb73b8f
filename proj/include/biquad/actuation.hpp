#pragma once

// Forward actuator model: propeller thrusts and servo tilts -> body wrench.
//
// Propellers 1, 2 sit on top at d1 = (0, l, b1), d2 = (0, -l, b1) and tilt
// about body Y. Propellers 3, 4 are fixed underneath at d3 = (0, l, -b2),
// d4 = (0, -l, -b2). Spin: 1 and 4 CCW, 2 and 3 CW.

#include "biquad/params.hpp"
#include "biquad/rigid_body.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace biquad {

using Vec6 = Eigen::Matrix<double, 6, 1>;

struct ActuatorCommand {
  double f1 = 0.0, f2 = 0.0, f3 = 0.0, f4 = 0.0;  // N
  double beta1 = 0.0, beta2 = 0.0;                // rad, about body Y

  std::array<double, 4> thrusts() const { return {f1, f2, f3, f4}; }
  bool operator==(const ActuatorCommand&) const = default;
};

/// Failure configurations the allocator can handle. A failed bottom
/// propeller has its allocation column removed and is commanded to 0 N.
enum class FailureMode { Nominal, Bottom3Out, Bottom4Out, BothBottomOut };

inline const char* to_string(FailureMode mode) {
  switch (mode) {
    case FailureMode::Nominal: return "none";
    case FailureMode::Bottom3Out: return "bottom3";
    case FailureMode::Bottom4Out: return "bottom4";
    case FailureMode::BothBottomOut: return "bottom-both";
  }
  return "?";
}

inline bool is_failed(FailureMode mode, int propeller) {
  switch (mode) {
    case FailureMode::Nominal: return false;
    case FailureMode::Bottom3Out: return propeller == 3;
    case FailureMode::Bottom4Out: return propeller == 4;
    case FailureMode::BothBottomOut: return propeller == 3 || propeller == 4;
  }
  return false;
}

/// Slots of the full decomposition [F1V, F1L, F2V, F2L, F3, F4] that stay
/// active in a given mode, in order.
inline std::vector<int> active_slots(FailureMode mode) {
  std::vector<int> slots{0, 1, 2, 3};
  if (!is_failed(mode, 3)) slots.push_back(4);
  if (!is_failed(mode, 4)) slots.push_back(5);
  return slots;
}

inline int decomposition_length(FailureMode mode) {
  return static_cast<int>(active_slots(mode).size());
}

/// Decomposed propeller forces for one failure mode. Nominal order is
/// [F1V, F1L, F2V, F2L, F3, F4]; failed bottom slots are dropped.
struct ForceDecomposition {
  FailureMode mode = FailureMode::Nominal;
  Eigen::VectorXd entries = Eigen::VectorXd::Zero(6);

  ForceDecomposition() = default;
  ForceDecomposition(FailureMode m, Eigen::VectorXd e) : mode(m), entries(std::move(e)) {
    if (entries.size() != decomposition_length(mode)) {
      throw std::invalid_argument("decomposition length " + std::to_string(entries.size()) +
                                  " does not match failure mode " + to_string(mode));
    }
  }

  /// Full 6-vector with zeros in the slots of failed propellers.
  Vec6 expanded() const {
    Vec6 full = Vec6::Zero();
    const auto slots = active_slots(mode);
    for (std::size_t i = 0; i < slots.size(); ++i) full[slots[i]] = entries[i];
    return full;
  }
};

struct ArmGeometry {
  Vec3 d1, d2, d3, d4;

  static ArmGeometry from(const VehicleParams& p) {
    return {{0.0, p.l, p.b1}, {0.0, -p.l, p.b1}, {0.0, p.l, -p.b2}, {0.0, -p.l, -p.b2}};
  }
};

inline Mat3 tilt_rotation(double beta) {
  const double c = std::cos(beta), s = std::sin(beta);
  Mat3 r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

inline ForceDecomposition decompose(const ActuatorCommand& u) {
  Eigen::VectorXd e(6);
  e << u.f1 * std::cos(u.beta1), u.f1 * std::sin(u.beta1),
       u.f2 * std::cos(u.beta2), u.f2 * std::sin(u.beta2),
       u.f3, u.f4;
  return {FailureMode::Nominal, std::move(e)};
}

/// Wrench from the decomposed forces, written out component by component.
inline Wrench wrench_from_decomposition(const Vec6& fd, const VehicleParams& p) {
  const double f1v = fd[0], f1l = fd[1], f2v = fd[2], f2l = fd[3], f3 = fd[4], f4 = fd[5];
  const double l = p.l, kr = p.k_r;
  Wrench w;
  w.F = {f1l + f2l, 0.0, f1v + f2v + f3 + f4};
  w.tau.x() = l * (f1v - f2v) + l * (f3 - f4) - kr * (f1l - f2l);
  w.tau.y() = p.b1 * (f1l + f2l);
  w.tau.z() = kr * (f3 - f4) - kr * (f1v - f2v) - l * (f1l - f2l);
  return w;
}

inline Wrench forward_wrench(const ActuatorCommand& u, const VehicleParams& params) {
  return wrench_from_decomposition(decompose(u).expanded(), params);
}

/// Same wrench assembled from tilt rotations and lever-arm cross products.
/// Only used to cross-check forward_wrench.
inline Wrench forward_wrench_vector_oracle(const ActuatorCommand& u, const VehicleParams& params) {
  const ArmGeometry arms = ArmGeometry::from(params);
  const Vec3 t1 = tilt_rotation(u.beta1) * Vec3(0.0, 0.0, u.f1);
  const Vec3 t2 = tilt_rotation(u.beta2) * Vec3(0.0, 0.0, u.f2);
  const Vec3 t3(0.0, 0.0, u.f3);
  const Vec3 t4(0.0, 0.0, u.f4);
  const double kr = params.k_r;

  Wrench w;
  w.F = t1 + t2 + t3 + t4;
  const Vec3 tau_thrust = arms.d1.cross(t1) + arms.d2.cross(t2) + arms.d3.cross(t3) +
                          arms.d4.cross(t4);
  const Vec3 tau_reaction = -kr * t1 + kr * t2 + kr * t3 - kr * t4;
  w.tau = tau_thrust + tau_reaction;
  return w;
}

/// What recompose/allocate had to alter or flag.
struct SaturationReport {
  bool f3_clamped = false;
  bool f4_clamped = false;
  bool beta1_beyond_limit = false;
  bool beta2_beyond_limit = false;

  int count() const {
    return int(f3_clamped) + int(f4_clamped) + int(beta1_beyond_limit) + int(beta2_beyond_limit);
  }
  bool any() const { return count() > 0; }
};

struct RecomposeResult {
  ActuatorCommand command;
  SaturationReport report;
};

inline constexpr double kDefaultTiltLimit = std::numbers::pi / 2.0;

/// Recovers thrust magnitudes and tilt angles from a full 6-entry
/// decomposition. Negative bottom thrusts are clamped to zero; tilts beyond
/// the servo limit are kept but flagged.
inline RecomposeResult recompose(const Vec6& fd, double tilt_limit = kDefaultTiltLimit) {
  RecomposeResult r;
  auto& u = r.command;
  u.f1 = std::hypot(fd[0], fd[1]);
  u.f2 = std::hypot(fd[2], fd[3]);
  u.beta1 = std::atan2(fd[1], fd[0]);
  u.beta2 = std::atan2(fd[3], fd[2]);
  u.f3 = fd[4];
  u.f4 = fd[5];
  if (u.f3 < 0.0) {
    u.f3 = 0.0;
    r.report.f3_clamped = true;
  }
  if (u.f4 < 0.0) {
    u.f4 = 0.0;
    r.report.f4_clamped = true;
  }
  r.report.beta1_beyond_limit = std::abs(u.beta1) > tilt_limit;
  r.report.beta2_beyond_limit = std::abs(u.beta2) > tilt_limit;
  return r;
}

inline RecomposeResult recompose(const ForceDecomposition& fd,
                                 double tilt_limit = kDefaultTiltLimit) {
  return recompose(fd.expanded(), tilt_limit);
}

}  // namespace biquad
