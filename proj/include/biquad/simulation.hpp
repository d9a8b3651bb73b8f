#pragma once

/**
 * @file simulation.hpp
 * @brief Closed-loop scenario runner.
 *
 * Each control step, in order:
 *   reference -> position_law -> desired_attitude -> attitude_error ->
 *   outer_loop -> inner_loop -> project_fz (Fx = tau_y,d / b1) -> allocate
 * The resulting actuator command is held while the plant is integrated over
 * control_dt / physics_dt RK4 substeps.
 */

#include "biquad/actuation.hpp"
#include "biquad/allocation.hpp"
#include "biquad/attitude_control.hpp"
#include "biquad/params.hpp"
#include "biquad/position_control.hpp"
#include "biquad/rigid_body.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace biquad {

// ---------------------------------------------------------------------------
// Trajectories

struct HoverTrajectory {
  Vec3 p = Vec3(0.0, 0.0, 4.0);
  double psi = 0.0;
};

struct CircleTrajectory {};

/// Time-indexed reference rows, linearly interpolated and held constant
/// outside the covered interval.
class TrajectoryTable {
 public:
  struct Row {
    double t;
    ReferenceSignal ref;
  };

  explicit TrajectoryTable(std::vector<Row> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("trajectory table is empty");
    for (std::size_t i = 1; i < rows_.size(); ++i) {
      if (!(rows_[i].t > rows_[i - 1].t)) {
        throw std::invalid_argument("trajectory times must be strictly increasing (row " +
                                    std::to_string(i + 1) + ")");
      }
    }
  }

  /// Rows of `t,px,py,pz,vx,vy,vz,ax,ay,az,psi`. Blank lines, lines starting
  /// with '#', and a header line whose first field is not numeric are skipped.
  static TrajectoryTable parse(std::istream& in) {
    std::vector<Row> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
      std::vector<double> vals;
      std::stringstream ss(line);
      std::string field;
      bool numeric = true;
      while (std::getline(ss, field, ',')) {
        try {
          std::size_t used = 0;
          vals.push_back(std::stod(field, &used));
          if (field.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
        } catch (const std::exception&) {
          numeric = false;
        }
      }
      if (!numeric) {
        if (rows.empty() && lineno == 1) continue;  // header
        throw std::invalid_argument("trajectory line " + std::to_string(lineno) +
                                    ": non-numeric field");
      }
      if (vals.size() != 11) {
        throw std::invalid_argument("trajectory line " + std::to_string(lineno) +
                                    ": expected 11 columns, got " + std::to_string(vals.size()));
      }
      Row r;
      r.t = vals[0];
      r.ref.p_d = {vals[1], vals[2], vals[3]};
      r.ref.v_d = {vals[4], vals[5], vals[6]};
      r.ref.a_d = {vals[7], vals[8], vals[9]};
      r.ref.psi = vals[10];
      rows.push_back(r);
    }
    return TrajectoryTable(std::move(rows));
  }

  static TrajectoryTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory file '" + path + "'");
    return parse(in);
  }

  ReferenceSignal operator()(double t) const {
    if (t <= rows_.front().t) return rows_.front().ref;
    if (t >= rows_.back().t) return rows_.back().ref;
    const auto hi = std::upper_bound(rows_.begin(), rows_.end(), t,
                                     [](double x, const Row& r) { return x < r.t; });
    const Row& b = *hi;
    const Row& a = *(hi - 1);
    const double s = (t - a.t) / (b.t - a.t);
    ReferenceSignal out;
    out.p_d = a.ref.p_d + s * (b.ref.p_d - a.ref.p_d);
    out.v_d = a.ref.v_d + s * (b.ref.v_d - a.ref.v_d);
    out.a_d = a.ref.a_d + s * (b.ref.a_d - a.ref.a_d);
    out.psi = a.ref.psi + s * (b.ref.psi - a.ref.psi);
    return out;
  }

  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::vector<Row> rows_;
};

struct FileTrajectory {
  std::string path;
};

using TrajectorySpec = std::variant<HoverTrajectory, CircleTrajectory, FileTrajectory>;
using ReferenceFn = std::function<ReferenceSignal(double)>;

inline ReferenceFn make_reference(const TrajectorySpec& spec) {
  return std::visit(
      [](const auto& s) -> ReferenceFn {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HoverTrajectory>) {
          ReferenceSignal ref;
          ref.p_d = s.p;
          ref.psi = s.psi;
          return [ref](double) { return ref; };
        } else if constexpr (std::is_same_v<T, CircleTrajectory>) {
          return circle_reference;
        } else {
          return TrajectoryTable::load(s.path);
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Scenario

struct FailureInjection {
  FailureMode mode = FailureMode::Nominal;
  double time = 0.0;  // s
};

struct ScenarioConfig {
  TrajectorySpec trajectory = CircleTrajectory{};
  double duration = 40.0;     // s
  double physics_dt = 1e-3;   // s
  double control_dt = 1e-3;   // s
  FailureInjection failure;
  RigidBodyState initial_state;  // origin, at rest, level
  RateDerivative rate_derivative = RateDerivative::ModelConsistent;
  AllocatorOptions allocator;
};

/// Number of physics substeps per control step; throws unless control_dt is
/// an integer multiple of physics_dt.
inline int substeps_per_control(const ScenarioConfig& cfg) {
  if (!(cfg.physics_dt > 0.0) || !(cfg.control_dt > 0.0)) {
    throw std::invalid_argument("physics_dt and control_dt must be positive");
  }
  const double ratio = cfg.control_dt / cfg.physics_dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n) {
    throw std::invalid_argument("control_dt must be an integer multiple of physics_dt");
  }
  return static_cast<int>(n);
}

inline void validate(const ScenarioConfig& cfg) {
  if (!(cfg.duration >= 0.0) || !std::isfinite(cfg.duration)) {
    throw std::invalid_argument("duration must be finite and nonnegative");
  }
  substeps_per_control(cfg);
  if (!(cfg.failure.time >= 0.0)) throw std::invalid_argument("failure time must be >= 0");
  if (!(cfg.allocator.tilt_limit > 0.0)) throw std::invalid_argument("tilt limit must be > 0");
}

struct EulerZYX {
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
  bool near_gimbal_lock = false;
};

inline EulerZYX quat_to_euler_zyx(const Quaternion& q) {
  const double w = q.w, x = q.v.x(), y = q.v.y(), z = q.v.z();
  EulerZYX e;
  e.roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  e.pitch = std::asin(std::clamp(2.0 * (w * y - z * x), -1.0, 1.0));
  e.yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  e.near_gimbal_lock = std::abs(e.pitch) > std::numbers::pi / 2.0 - 1e-6;
  return e;
}

struct SimLogRecord {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 p_d = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quaternion q;
  EulerZYX euler;
  Vec3 w = Vec3::Zero();
  ActuatorCommand u;
  double Fz_cmd = 0.0;
  Vec3 tau_cmd = Vec3::Zero();
  SaturationReport saturation;
  FailureMode mode = FailureMode::Nominal;
  bool attitude_held = false;  // desired attitude was degenerate this step
  int physics_steps = 0;
};

/// Per-control-step internals handed to an observer; not logged to CSV.
struct ControlStepTrace {
  double t = 0.0;
  RigidBodyState state;
  ReferenceSignal ref;
  Vec3 F_des = Vec3::Zero();
  DesiredAttitude desired;
  AttitudeError att_error;
  Vec3 omega_d = Vec3::Zero();
  RateLoopOutput rate;
  ReducedWrench demanded;
  AllocationResult allocation;
  Wrench applied;
};

using StepObserver = std::function<void(const ControlStepTrace&)>;

/// Closed-loop controller state that persists across control steps.
class Controller {
 public:
  Controller(const ParameterSet& params, RateDerivative rate_mode, AllocatorOptions opts = {})
      : params_(params), allocator_(params.vehicle, opts), rate_mode_(rate_mode) {}

  ControlStepTrace step(double t, const RigidBodyState& s, const ReferenceSignal& ref,
                        FailureMode mode, double dt, bool* held = nullptr) {
    const auto& vp = params_.vehicle;
    const auto& gains = params_.gains;
    ControlStepTrace tr;
    tr.t = t;
    tr.state = s;
    tr.ref = ref;
    tr.F_des = position_law(s, ref, gains, vp);
    bool hold = false;
    try {
      tr.desired = desired_attitude(tr.F_des, ref.psi);
    } catch (const DegenerateAttitudeError&) {
      hold = true;
      if (last_desired_) {
        tr.desired = *last_desired_;
      } else {
        tr.desired.q_c = s.q.w >= 0.0 ? s.q : -s.q;
        tr.desired.R_c = quat_to_rotmat(tr.desired.q_c);
      }
    }
    last_desired_ = tr.desired;
    if (held) *held = hold;

    tr.att_error = attitude_error(s.q, tr.desired.q_c);
    tr.omega_d = outer_loop(tr.att_error, gains.k_p_q);
    tr.rate = inner_loop(s.w, tr.omega_d, rate_state_, dt, vp.J, gains, rate_mode_);

    const double fx_body = tr.rate.tau_d.y() / vp.b1;
    const Mat3 R = quat_to_rotmat(s.q);
    tr.demanded = {project_fz(tr.F_des, R, fx_body), tr.rate.tau_d};
    tr.allocation = allocator_.allocate(tr.demanded, mode);
    tr.applied = forward_wrench(tr.allocation.command, vp);
    return tr;
  }

 private:
  ParameterSet params_;
  Allocator allocator_;
  RateDerivative rate_mode_;
  RateLoopState rate_state_;
  std::optional<DesiredAttitude> last_desired_;
};

inline std::vector<SimLogRecord> run_scenario(const ScenarioConfig& cfg,
                                              const ParameterSet& params,
                                              const StepObserver& observer = {}) {
  validate(cfg);
  validate(params);
  const int substeps = substeps_per_control(cfg);
  const auto steps = static_cast<long long>(std::llround(cfg.duration / cfg.control_dt));
  std::vector<SimLogRecord> log;
  if (steps == 0) return log;
  log.reserve(static_cast<std::size_t>(steps));

  const ReferenceFn reference = make_reference(cfg.trajectory);
  Controller controller(params, cfg.rate_derivative, cfg.allocator);
  RigidBodyState s = cfg.initial_state;
  s.q = quat_normalize(s.q);

  for (long long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.control_dt;
    const bool failed = cfg.failure.mode != FailureMode::Nominal &&
                        t >= cfg.failure.time - 1e-9 * cfg.control_dt;
    const FailureMode mode = failed ? cfg.failure.mode : FailureMode::Nominal;

    const ReferenceSignal ref = reference(t);
    bool held = false;
    const ControlStepTrace tr = controller.step(t, s, ref, mode, cfg.control_dt, &held);
    if (observer) observer(tr);

    SimLogRecord rec;
    rec.t = t;
    rec.p = s.p;
    rec.p_d = ref.p_d;
    rec.v = s.v;
    rec.q = s.q;
    rec.euler = quat_to_euler_zyx(s.q);
    rec.w = s.w;
    rec.u = tr.allocation.command;
    rec.Fz_cmd = tr.demanded.Fz;
    rec.tau_cmd = tr.demanded.tau;
    rec.saturation = tr.allocation.report;
    rec.mode = mode;
    rec.attitude_held = held;

    for (int i = 0; i < substeps; ++i) {
      s = rk4_step(s, tr.applied, cfg.physics_dt, params.vehicle);
      ++rec.physics_steps;
    }
    log.push_back(rec);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Summary

struct RunSummary {
  double final_position_error = 0.0;
  double rms_error_final_half = 0.0;
  std::optional<double> max_error_after_20s;
  double max_thrust = 0.0;
  int saturation_events = 0;  // control steps with any saturation flag
};

inline RunSummary summarize(const std::vector<SimLogRecord>& log) {
  RunSummary out;
  if (log.empty()) return out;
  out.final_position_error = (log.back().p - log.back().p_d).norm();
  const std::size_t half = log.size() / 2;
  double sq = 0.0;
  for (std::size_t i = half; i < log.size(); ++i) sq += (log[i].p - log[i].p_d).squaredNorm();
  out.rms_error_final_half = std::sqrt(sq / static_cast<double>(log.size() - half));
  for (const auto& r : log) {
    if (r.t >= 20.0) {
      const double e = (r.p - r.p_d).norm();
      out.max_error_after_20s = std::max(out.max_error_after_20s.value_or(0.0), e);
    }
    for (double f : r.u.thrusts()) out.max_thrust = std::max(out.max_thrust, f);
    if (r.saturation.any()) ++out.saturation_events;
  }
  return out;
}

}  // namespace biquad
