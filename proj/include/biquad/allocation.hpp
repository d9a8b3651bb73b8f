#pragma once

/**
 * @file allocation.hpp
 * @brief Force-decomposition control allocation.
 *
 * The reduced wrench (F_z, tau_x, tau_y, tau_z) is linear in the decomposed
 * forces [F1V, F1L, F2V, F2L, F3, F4]:
 *
 *   [F_z; tau] = A_st * F_dec,   A_st in R^{4x6}
 *
 * F_x is not an independent channel (F_x = tau_y / b1) and F_y is always 0.
 * The minimum-norm solution F_dec = pinv(A_st) * [F_z; tau] is recomposed into
 * thrusts and tilt angles. Failing a bottom propeller removes its column; with
 * both bottom propellers out the system is square (the plain Bicopter).
 */

#include "biquad/actuation.hpp"
#include "biquad/params.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace biquad {

using Vec4 = Eigen::Vector4d;

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Commanded body-z force and body torque.
struct ReducedWrench {
  double Fz = 0.0;
  Vec3 tau = Vec3::Zero();

  Vec4 stacked() const { return {Fz, tau.x(), tau.y(), tau.z()}; }
  static ReducedWrench from(const Wrench& w) { return {w.F.z(), w.tau}; }
};

/// Full 4x6 static allocation matrix, rows (F_z, tau_x, tau_y, tau_z).
inline Eigen::Matrix<double, 4, 6> static_allocation_matrix(const VehicleParams& p) {
  const double l = p.l, kr = p.k_r, b1 = p.b1;
  Eigen::Matrix<double, 4, 6> a;
  a << 1.0, 0.0, 1.0, 0.0, 1.0, 1.0,
       l, -kr, -l, kr, l, -l,
       0.0, b1, 0.0, b1, 0.0, 0.0,
       -kr, -l, kr, l, kr, -kr;
  return a;
}

/// Pseudo-inverse of a full-row-rank matrix through the SVD. Singular values
/// below 1e-12 * sigma_max count as zero; any such value is a rank error.
inline Eigen::MatrixXd checked_pseudo_inverse(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double tol = 1e-12 * sigma[0];
  const Eigen::Index rank = (sigma.array() > tol).count();
  if (rank < std::min(a.rows(), a.cols())) {
    throw RankDeficientError("allocation matrix is rank deficient (rank " +
                             std::to_string(rank) + " of " + std::to_string(a.rows()) + ")");
  }
  return svd.matrixV() * sigma.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

struct AllocationMatrix {
  FailureMode mode = FailureMode::Nominal;
  Eigen::MatrixXd A;       // 4 x k
  Eigen::MatrixXd A_pinv;  // k x 4
};

inline AllocationMatrix build_allocation(const VehicleParams& params, FailureMode mode) {
  validate(params);
  const Eigen::Matrix<double, 4, 6> full = static_allocation_matrix(params);
  const auto slots = active_slots(mode);
  AllocationMatrix m;
  m.mode = mode;
  m.A.resize(4, static_cast<Eigen::Index>(slots.size()));
  for (std::size_t c = 0; c < slots.size(); ++c) m.A.col(c) = full.col(slots[c]);
  m.A_pinv = checked_pseudo_inverse(m.A);
  return m;
}

/// Symbolic pseudo-inverse of the nominal 4x6 matrix. Kept as an independent
/// check on the numeric route.
inline Eigen::Matrix<double, 6, 4> closed_form_pinv(const VehicleParams& p) {
  const double l = p.l, kr = p.k_r, b1 = p.b1;
  const double s = l * l + kr * kr;
  const double s2 = s * s;
  const double a = l * (l * l + 3.0 * kr * kr) / (4.0 * s2);
  const double b = kr * (3.0 * l * l + kr * kr) / (4.0 * s2);
  const double c = kr * kr * kr / (2.0 * s2);
  const double d = l * l * l / (2.0 * s2);
  const double e = 1.0 / (2.0 * b1);
  Eigen::Matrix<double, 6, 4> m;
  m << 0.25, a, 0.0, -b,
       0.0, -c, e, -d,
       0.25, -a, 0.0, b,
       0.0, c, e, d,
       0.25, l / (4.0 * s), 0.0, kr / (4.0 * s),
       0.25, -l / (4.0 * s), 0.0, -kr / (4.0 * s);
  return m;
}

struct AllocationResult {
  ActuatorCommand command;
  ForceDecomposition decomposition;  // unclamped minimum-norm solution
  SaturationReport report;
};

struct AllocatorOptions {
  double tilt_limit = kDefaultTiltLimit;
};

inline AllocationResult allocate(const ReducedWrench& w, const AllocationMatrix& alloc,
                                 const AllocatorOptions& opts = {}) {
  AllocationResult r;
  r.decomposition = ForceDecomposition(alloc.mode, alloc.A_pinv * w.stacked());
  const RecomposeResult rc = recompose(r.decomposition, opts.tilt_limit);
  r.command = rc.command;
  r.report = rc.report;
  if (is_failed(alloc.mode, 3)) r.command.f3 = 0.0;
  if (is_failed(alloc.mode, 4)) r.command.f4 = 0.0;
  return r;
}

inline AllocationResult allocate(const ReducedWrench& w, const VehicleParams& params,
                                 FailureMode mode, const AllocatorOptions& opts = {}) {
  return allocate(w, build_allocation(params, mode), opts);
}

/// Allocation matrices for every failure mode, built once.
class Allocator {
 public:
  explicit Allocator(const VehicleParams& params, AllocatorOptions opts = {})
      : opts_(opts),
        matrices_{build_allocation(params, FailureMode::Nominal),
                  build_allocation(params, FailureMode::Bottom3Out),
                  build_allocation(params, FailureMode::Bottom4Out),
                  build_allocation(params, FailureMode::BothBottomOut)} {}

  const AllocationMatrix& matrix(FailureMode mode) const {
    return matrices_[static_cast<std::size_t>(mode)];
  }

  AllocationResult allocate(const ReducedWrench& w, FailureMode mode) const {
    return biquad::allocate(w, matrix(mode), opts_);
  }

 private:
  AllocatorOptions opts_;
  std::array<AllocationMatrix, 4> matrices_;
};

/// Checks that fd has no larger 2-norm than fd + n for `samples` random
/// null-space vectors n of A. Throws if fd does not solve A fd = w.
inline bool min_norm_check(const ReducedWrench& w, const ForceDecomposition& fd,
                           const VehicleParams& params, FailureMode mode, int samples = 100,
                           std::uint64_t seed = 1) {
  const AllocationMatrix alloc = build_allocation(params, mode);
  if (fd.entries.size() != alloc.A.cols()) {
    throw std::invalid_argument("decomposition length does not match failure mode");
  }
  const Vec4 target = w.stacked();
  const double residual = (alloc.A * fd.entries - target).norm();
  if (residual > 1e-9 * std::max(1.0, target.norm())) {
    throw std::invalid_argument("decomposition does not solve the allocation equation");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(alloc.A, Eigen::ComputeFullV);
  const Eigen::Index k = alloc.A.cols();
  const Eigen::Index nullity = k - 4;
  if (nullity == 0) return true;
  const Eigen::MatrixXd basis = svd.matrixV().rightCols(nullity);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 10.0);
  const double base = fd.entries.norm();
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXd coeff(nullity);
    for (Eigen::Index j = 0; j < nullity; ++j) coeff[j] = normal(rng);
    const Eigen::VectorXd n = scale(rng) * (basis * coeff).normalized();
    if ((fd.entries + n).norm() < base) return false;
  }
  return true;
}

}  // namespace biquad
