#pragma once

/**
 * @file params.hpp
 * @brief Vehicle and controller constants for the Bi-Quadcopter.
 *
 * Defaults are the published vehicle/controller table. A flat JSON document
 * (see docs/params.schema.json) can override any subset of the keys:
 *
 *   m, g, l, b1, b2, J[3], k_r, k_p, k_d, k_p_q, K_p_w[3], K_d_w[3]
 *
 * All values are SI.
 */

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cmath>
#include <initializer_list>
#include <utility>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace biquad {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Thrown when a parameter violates its invariant. field() names the key.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Thrown when a config document cannot be parsed or has unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VehicleParams {
  double m = 5.0;        // kg
  double g = 9.8;        // m/s^2
  double l = 0.2539;     // lateral arm (m)
  double b1 = 0.14838;   // top propeller height above CoM (m)
  double b2 = 0.14838;   // bottom propeller depth below CoM (m); cancels from every torque
  Vec3 J{0.366, 0.171, 0.391};  // principal inertia (kg m^2)
  double k_r = 0.0008;   // torque/thrust ratio (m)

  Mat3 inertia() const { return J.asDiagonal(); }
  bool operator==(const VehicleParams&) const = default;
};

struct ControllerGains {
  double k_p = 16.0;
  double k_d = 10.0;
  double k_p_q = 10.0;
  Vec3 K_p_w{2.5, 2.0, 5.0};
  Vec3 K_d_w{0.1, 0.2, 0.1};

  bool operator==(const ControllerGains&) const = default;
};

struct ParameterSet {
  VehicleParams vehicle;
  ControllerGains gains;

  bool operator==(const ParameterSet&) const = default;
};

inline ParameterSet default_params() { return {}; }

namespace detail {

inline std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void require(bool ok, const std::string& field, double value, const char* rule) {
  if (!ok) {
    throw ValidationError(field, "parameter '" + field + "' = " + format_value(value) +
                                     " violates " + rule);
  }
}

inline void require_finite(const std::string& field, double value) {
  require(std::isfinite(value), field, value, "finiteness");
}

}  // namespace detail

inline void validate(const VehicleParams& p) {
  using detail::require;
  using Entry = std::pair<const char*, double>;
  for (auto [name, v] : std::initializer_list<Entry>{
           {"m", p.m}, {"g", p.g}, {"l", p.l}, {"b1", p.b1}, {"b2", p.b2}, {"k_r", p.k_r}}) {
    detail::require_finite(name, v);
  }
  require(p.m > 0, "m", p.m, "m > 0");
  require(p.g > 0, "g", p.g, "g > 0");
  require(p.l > 0, "l", p.l, "l > 0");
  require(p.b1 > 0, "b1", p.b1, "b1 > 0");
  require(p.b2 >= 0, "b2", p.b2, "b2 >= 0");
  require(p.k_r >= 0, "k_r", p.k_r, "k_r >= 0");
  for (int i = 0; i < 3; ++i) {
    const std::string name = "J[" + std::to_string(i) + "]";
    detail::require_finite(name, p.J[i]);
    require(p.J[i] > 0, name, p.J[i], "J > 0");
  }
}

inline void validate(const ControllerGains& g) {
  using detail::require;
  using Entry = std::pair<const char*, double>;
  for (auto [name, v] :
       std::initializer_list<Entry>{{"k_p", g.k_p}, {"k_d", g.k_d}, {"k_p_q", g.k_p_q}}) {
    detail::require_finite(name, v);
    require(v > 0, name, v, std::string(name).append(" > 0").c_str());
  }
  for (int i = 0; i < 3; ++i) {
    const std::string kp = "K_p_w[" + std::to_string(i) + "]";
    const std::string kd = "K_d_w[" + std::to_string(i) + "]";
    detail::require_finite(kp, g.K_p_w[i]);
    detail::require_finite(kd, g.K_d_w[i]);
    require(g.K_p_w[i] > 0, kp, g.K_p_w[i], "K_p_w > 0");
    require(g.K_d_w[i] > 0, kd, g.K_d_w[i], "K_d_w > 0");
  }
}

inline void validate(const ParameterSet& ps) {
  validate(ps.vehicle);
  validate(ps.gains);
}

namespace detail {

inline double read_scalar(const nlohmann::json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

inline Vec3 read_vec3(const nlohmann::json& doc, const char* key, const Vec3& fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw ConfigError(std::string("key '") + key + "' must be an array of 3 numbers");
  }
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(std::string("key '") + key + "' must be an array of 3 numbers");
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

inline constexpr std::array<std::string_view, 12> kKnownKeys = {
    "m", "g", "l", "b1", "b2", "J", "k_r", "k_p", "k_d", "k_p_q", "K_p_w", "K_d_w"};

}  // namespace detail

/// Parses a flat JSON document. Missing keys keep their defaults; unknown
/// keys are rejected so that typos do not silently fall back to defaults.
inline ParameterSet load_params(std::string_view config_text) {
  const bool blank = config_text.find_first_not_of(" \t\r\n") == std::string_view::npos;
  nlohmann::json doc = nlohmann::json::object();
  if (!blank) {
    try {
      doc = nlohmann::json::parse(config_text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("cannot parse parameter document: ") + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("parameter document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    bool known = false;
    for (auto k : detail::kKnownKeys) known = known || k == key;
    if (!known) throw ConfigError("unknown parameter key '" + key + "'");
  }

  ParameterSet ps;
  auto& v = ps.vehicle;
  auto& g = ps.gains;
  v.m = detail::read_scalar(doc, "m", v.m);
  v.g = detail::read_scalar(doc, "g", v.g);
  v.l = detail::read_scalar(doc, "l", v.l);
  v.b1 = detail::read_scalar(doc, "b1", v.b1);
  // b2 tracks b1 unless given explicitly.
  v.b2 = detail::read_scalar(doc, "b2", v.b1);
  v.J = detail::read_vec3(doc, "J", v.J);
  v.k_r = detail::read_scalar(doc, "k_r", v.k_r);
  g.k_p = detail::read_scalar(doc, "k_p", g.k_p);
  g.k_d = detail::read_scalar(doc, "k_d", g.k_d);
  g.k_p_q = detail::read_scalar(doc, "k_p_q", g.k_p_q);
  g.K_p_w = detail::read_vec3(doc, "K_p_w", g.K_p_w);
  g.K_d_w = detail::read_vec3(doc, "K_d_w", g.K_d_w);
  validate(ps);
  return ps;
}

inline std::string serialize(const ParameterSet& ps) {
  auto arr = [](const Vec3& x) { return nlohmann::json::array({x[0], x[1], x[2]}); };
  nlohmann::json doc = {
      {"m", ps.vehicle.m},       {"g", ps.vehicle.g},         {"l", ps.vehicle.l},
      {"b1", ps.vehicle.b1},     {"b2", ps.vehicle.b2},       {"J", arr(ps.vehicle.J)},
      {"k_r", ps.vehicle.k_r},   {"k_p", ps.gains.k_p},       {"k_d", ps.gains.k_d},
      {"k_p_q", ps.gains.k_p_q}, {"K_p_w", arr(ps.gains.K_p_w)}, {"K_d_w", arr(ps.gains.K_d_w)},
  };
  return doc.dump(2);
}

}  // namespace biquad
