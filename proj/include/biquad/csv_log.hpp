#pragma once

// CSV output for simulation logs. Column order is fixed; see kCsvColumns and
// docs/csv_format.md. Floats are written with 17 significant digits so that
// values survive a text round trip exactly.

#include "biquad/simulation.hpp"

#include <array>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace biquad {

inline constexpr std::array<std::string_view, 36> kCsvColumns = {
    "t",         "px",        "py",        "pz",        "pdx",       "pdy",
    "pdz",       "vx",        "vy",        "vz",        "qw",        "qx",
    "qy",        "qz",        "roll",      "pitch",     "yaw",       "wx",
    "wy",        "wz",        "f1",        "f2",        "f3",        "f4",
    "beta1",     "beta2",     "Fz_cmd",    "tau_x_cmd", "tau_y_cmd", "tau_z_cmd",
    "sat_f3",    "sat_f4",    "sat_beta1", "sat_beta2", "gimbal",    "mode"};

inline void write_csv(const std::vector<SimLogRecord>& records, std::ostream& os) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    os << (i ? "," : "") << kCsvColumns[i];
  }
  os << '\n';
  const auto old_precision = os.precision(17);
  for (const auto& r : records) {
    auto put3 = [&os](const Vec3& x) { os << ',' << x.x() << ',' << x.y() << ',' << x.z(); };
    os << r.t;
    put3(r.p);
    put3(r.p_d);
    put3(r.v);
    os << ',' << r.q.w;
    put3(r.q.v);
    os << ',' << r.euler.roll << ',' << r.euler.pitch << ',' << r.euler.yaw;
    put3(r.w);
    os << ',' << r.u.f1 << ',' << r.u.f2 << ',' << r.u.f3 << ',' << r.u.f4 << ',' << r.u.beta1
       << ',' << r.u.beta2 << ',' << r.Fz_cmd;
    put3(r.tau_cmd);
    os << ',' << int(r.saturation.f3_clamped) << ',' << int(r.saturation.f4_clamped) << ','
       << int(r.saturation.beta1_beyond_limit) << ',' << int(r.saturation.beta2_beyond_limit)
       << ',' << int(r.euler.near_gimbal_lock) << ',' << to_string(r.mode) << '\n';
  }
  os.precision(old_precision);
}

inline void write_csv(const std::vector<SimLogRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(records, out);
  out.flush();
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace biquad
