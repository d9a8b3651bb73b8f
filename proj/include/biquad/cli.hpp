#pragma once

// Command-line front end for the scenario runner. Kept in a header so the
// test suite can drive it directly.

#include "biquad/csv_log.hpp"
#include "biquad/params.hpp"
#include "biquad/simulation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace biquad {

inline std::map<std::string, FailureMode> failure_mode_names() {
  return {{"none", FailureMode::Nominal},
          {"bottom3", FailureMode::Bottom3Out},
          {"bottom4", FailureMode::Bottom4Out},
          {"bottom-both", FailureMode::BothBottomOut}};
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void print_summary(std::ostream& out, const RunSummary& s, std::size_t records) {
  out << std::setprecision(6);
  out << "records                 : " << records << '\n';
  out << "final position error [m]: " << s.final_position_error << '\n';
  out << "RMS error, last 50% [m] : " << s.rms_error_final_half << '\n';
  if (s.max_error_after_20s) {
    out << "max error after 20 s [m]: " << *s.max_error_after_20s << '\n';
  }
  out << "max thrust [N]          : " << s.max_thrust << '\n';
  out << "saturation events       : " << s.saturation_events << '\n';
}

/// Returns 0 on success, 1 on usage errors, 2 on configuration or runtime
/// errors.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bi-Quadcopter closed-loop simulator", "biquad_sim"};

  std::string scenario;
  double duration = 40.0;
  double physics_dt = 1e-3;
  double control_dt = 1e-3;
  FailureMode failure = FailureMode::Nominal;
  double failure_time = 0.0;
  std::string params_path;
  std::string out_path;
  std::string traj_path;
  std::vector<double> hover_pos{0.0, 0.0, 4.0};
  double psi = 0.0;
  bool start_at_setpoint = false;
  double tilt_limit = kDefaultTiltLimit;

  app.add_option("scenario", scenario, "Scenario: hover, circle or file")
      ->required()
      ->check(CLI::IsMember({"hover", "circle", "file"}));
  app.add_option("--duration", duration, "Simulated time [s]")->capture_default_str();
  app.add_option("--physics-dt", physics_dt, "Integrator step [s]")->capture_default_str();
  app.add_option("--control-dt", control_dt, "Controller period [s]")->capture_default_str();
  auto* failure_opt =
      app.add_option("--failure", failure, "Injected failure: none, bottom3, bottom4, bottom-both")
          ->transform(CLI::CheckedTransformer(failure_mode_names(), CLI::ignore_case))
          ->option_text("MODE");
  auto* failure_time_opt =
      app.add_option("--failure-time", failure_time, "Failure injection time [s]");
  failure_time_opt->needs(failure_opt);
  app.add_option("--params", params_path, "Vehicle/controller parameter file (JSON)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "CSV log output path");
  app.add_option("--traj", traj_path, "Trajectory file for the 'file' scenario")
      ->check(CLI::ExistingFile);
  app.add_option("--hover-pos", hover_pos, "Hover setpoint x y z [m]")->expected(3);
  app.add_option("--psi", psi, "Hover heading [rad]");
  app.add_flag("--start-at-setpoint", start_at_setpoint,
               "Start at rest on the hover setpoint instead of the origin");
  app.add_option("--tilt-limit", tilt_limit, "Servo tilt limit for flagging [rad]")
      ->capture_default_str();

  if (argc <= 1) {
    out << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return 1;
  }

  try {
    ScenarioConfig cfg;
    cfg.duration = duration;
    cfg.physics_dt = physics_dt;
    cfg.control_dt = control_dt;
    cfg.failure = {failure, failure_time};
    cfg.allocator.tilt_limit = tilt_limit;
    if (scenario == "hover") {
      HoverTrajectory h{Vec3(hover_pos[0], hover_pos[1], hover_pos[2]), psi};
      cfg.trajectory = h;
      if (start_at_setpoint) {
        cfg.initial_state.p = h.p;
        cfg.initial_state.q = Quaternion::from_axis_angle(Vec3::UnitZ(), psi);
      }
    } else if (scenario == "circle") {
      cfg.trajectory = CircleTrajectory{};
    } else {
      if (traj_path.empty()) {
        err << "error: the 'file' scenario requires --traj <path>\n";
        return 1;
      }
      cfg.trajectory = FileTrajectory{traj_path};
    }
    if (scenario != "hover" && start_at_setpoint) {
      err << "error: --start-at-setpoint only applies to the hover scenario\n";
      return 1;
    }

    const ParameterSet params =
        params_path.empty() ? default_params() : load_params(read_text_file(params_path));
    const auto log = run_scenario(cfg, params);
    if (!out_path.empty()) write_csv(log, out_path);
    print_summary(out, summarize(log), log.size());
    if (!out_path.empty()) out << "wrote " << out_path << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace biquad
