#pragma once
// Vehicle geometry and the control effectiveness model.
//
// The effectiveness matrix G maps squared rotor speeds u = omega^2 to body
// moments and total vertical force:
//   row 0: M_roll  = sum r_i*kappa_i*cos(i*2pi/n + upsilon) * u_i
//   row 1: M_pitch = sum r_i*kappa_i*sin(i*2pi/n + upsilon) * u_i
//   row 2: M_yaw   = sum spin_sign_i*tau_i * u_i
//   row 3: F_z     = sum kappa_i * u_i
// scaled_G premultiplies by blockdiag(I_v^-1, 1/m) so it maps u directly to
// [omega_dot; vertical specific force].

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ftc {

struct VehicleConfig {
  int n = 0;
  Eigen::VectorXd arm_length_m;  // r per rotor
  Eigen::VectorXd kappa;         // thrust coefficient per rotor, N/(rad/s)^2
  Eigen::VectorXd tau;           // yaw-moment coefficient per rotor, N*m/(rad/s)^2
  Eigen::VectorXd spin_sign;     // +1/-1 per rotor
  double upsilon = 0.0;          // frame rotation, rad
  Eigen::VectorXd omega_min;     // rad/s, >= 0 (unidirectional rotors)
  Eigen::VectorXd omega_max;     // rad/s
  Eigen::Vector3d inertia = Eigen::Vector3d::Zero();  // I_v diagonal, kg*m^2
  double rotor_inertia_zz = 0.0;                      // I_r,zz, kg*m^2
  double mass = 0.0;                                  // kg

  void validate() const {
    if (n < 3) throw std::invalid_argument("vehicle: n must be >= 3");
    auto want_n = [&](const Eigen::VectorXd& v, const char* name) {
      if (v.size() != n) throw std::invalid_argument(std::string("vehicle: ") + name +
                                                     " must have one entry per rotor");
      if (!v.allFinite()) throw std::invalid_argument(std::string("vehicle: non-finite ") + name);
    };
    want_n(arm_length_m, "arm_length_m");
    want_n(kappa, "kappa");
    want_n(tau, "tau");
    want_n(spin_sign, "spin_sign");
    want_n(omega_min, "omega_min");
    want_n(omega_max, "omega_max");
    if (!std::isfinite(upsilon)) throw std::invalid_argument("vehicle: non-finite upsilon");
    for (int i = 0; i < n; ++i) {
      if (!(kappa[i] > 0.0)) throw std::invalid_argument("vehicle: kappa must be > 0");
      if (!(tau[i] > 0.0)) throw std::invalid_argument("vehicle: tau must be > 0");
      if (!(arm_length_m[i] > 0.0)) throw std::invalid_argument("vehicle: arm length must be > 0");
      if (spin_sign[i] != 1.0 && spin_sign[i] != -1.0)
        throw std::invalid_argument("vehicle: spin_sign entries must be +1 or -1");
      if (!(omega_min[i] >= 0.0)) throw std::invalid_argument("vehicle: omega_min must be >= 0");
      if (!(omega_max[i] > omega_min[i]))
        throw std::invalid_argument("vehicle: omega_max must exceed omega_min");
    }
    if (!(inertia.minCoeff() > 0.0)) throw std::invalid_argument("vehicle: inertia must be > 0");
    if (!(mass > 0.0)) throw std::invalid_argument("vehicle: mass must be > 0");
    if (!(rotor_inertia_zz >= 0.0))
      throw std::invalid_argument("vehicle: rotor inertia must be >= 0");
  }

  Eigen::VectorXd u_min() const { return omega_min.array().square(); }
  Eigen::VectorXd u_max() const { return omega_max.array().square(); }

  static VehicleConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static VehicleConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("vehicle: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

namespace detail {
// Accepts either a scalar (broadcast to all rotors) or an n-element array.
inline Eigen::VectorXd per_rotor(const nlohmann::json& j, const char* key, int n) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("vehicle json: missing ") + key);
  const auto& v = j.at(key);
  Eigen::VectorXd out(n);
  if (v.is_number()) {
    out.setConstant(v.get<double>());
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != n)
      throw std::invalid_argument(std::string("vehicle json: ") + key + " length mismatch");
    for (int i = 0; i < n; ++i) out[i] = v.at(i).get<double>();
  } else {
    throw std::invalid_argument(std::string("vehicle json: ") + key + " must be number or array");
  }
  return out;
}
}  // namespace detail

inline VehicleConfig VehicleConfig::from_json(const nlohmann::json& j) {
  VehicleConfig c;
  c.n = j.at("n").get<int>();
  if (c.n < 3) throw std::invalid_argument("vehicle json: n must be >= 3");
  c.arm_length_m = detail::per_rotor(j, "arm_length_m", c.n);
  c.kappa = detail::per_rotor(j, "kappa", c.n);
  c.tau = detail::per_rotor(j, "tau", c.n);
  c.spin_sign = detail::per_rotor(j, "spin_sign", c.n);
  c.upsilon = j.value("upsilon", 0.0);
  c.omega_min = detail::per_rotor(j, "omega_min", c.n);
  c.omega_max = detail::per_rotor(j, "omega_max", c.n);
  auto iv = j.at("inertia");
  if (!iv.is_array() || iv.size() != 3)
    throw std::invalid_argument("vehicle json: inertia must be a 3-array");
  c.inertia = Eigen::Vector3d(iv.at(0).get<double>(), iv.at(1).get<double>(),
                              iv.at(2).get<double>());
  c.rotor_inertia_zz = j.at("rotor_inertia_zz").get<double>();
  c.mass = j.at("mass").get<double>();
  c.validate();
  return c;
}

inline nlohmann::json VehicleConfig::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  auto arr = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["arm_length_m"] = arr(arm_length_m);
  j["kappa"] = arr(kappa);
  j["tau"] = arr(tau);
  j["spin_sign"] = arr(spin_sign);
  j["upsilon"] = upsilon;
  j["omega_min"] = arr(omega_min);
  j["omega_max"] = arr(omega_max);
  j["inertia"] = std::vector<double>{inertia[0], inertia[1], inertia[2]};
  j["rotor_inertia_zz"] = rotor_inertia_zz;
  j["mass"] = mass;
  return j;
}

struct EffectivenessModel {
  Eigen::MatrixXd G;              // 4 x n, failed columns zeroed
  Eigen::MatrixXd scaled_G;       // blockdiag(I_v^-1, 1/m) * G
  Eigen::MatrixXd pinv_scaled_G;  // n x 4, zero rows for failed rotors
  std::set<int> failed_mask;
  Eigen::VectorXd u_lo, u_hi;  // actuator box; failed rotors pinned to [0, 0]
  // True when the post-failure model lost yaw authority: the pseudo-inverse
  // then inverts only the (roll, pitch, thrust) rows and its yaw column is 0.
  bool yaw_uncontrollable = false;

  int n() const { return static_cast<int>(G.cols()); }
  int healthy_count() const { return n() - static_cast<int>(failed_mask.size()); }
  bool is_failed(int i) const { return failed_mask.count(i) > 0; }
};

namespace detail {

inline Eigen::MatrixXd pinv_svd(const Eigen::MatrixXd& A, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  double cut = s.size() ? rel_tol * s[0] : 0.0;
  Eigen::VectorXd si = Eigen::VectorXd::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cut) si[i] = 1.0 / s[i];
  return svd.matrixV() * si.asDiagonal() * svd.matrixU().transpose();
}

inline int numeric_rank(const Eigen::MatrixXd& A, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (!s.size() || s[0] <= 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++r;
  return r;
}

// Pseudo-inverse over the healthy columns, scattered back to n rows.
// Failure of a quad leaves the yaw row unservable; in that case only the
// (roll, pitch, thrust) rows are inverted and the yaw column stays zero.
inline void rebuild_pinv(EffectivenessModel& m) {
  std::vector<int> healthy;
  for (int i = 0; i < m.n(); ++i)
    if (!m.is_failed(i)) healthy.push_back(i);
  const int h = static_cast<int>(healthy.size());
  Eigen::MatrixXd A(4, h);
  for (int k = 0; k < h; ++k) A.col(k) = m.scaled_G.col(healthy[k]);

  Eigen::MatrixXd P;  // h x 4
  m.yaw_uncontrollable = false;
  if (numeric_rank(A) >= 4) {
    P = pinv_svd(A);
  } else {
    Eigen::MatrixXd A3(3, h);
    A3.row(0) = A.row(0);
    A3.row(1) = A.row(1);
    A3.row(2) = A.row(3);
    if (numeric_rank(A3) < 3)
      throw std::runtime_error(
          "effectiveness: remaining rotors cannot span roll/pitch/thrust");
    Eigen::MatrixXd P3 = pinv_svd(A3);  // h x 3
    P = Eigen::MatrixXd::Zero(h, 4);
    P.col(0) = P3.col(0);
    P.col(1) = P3.col(1);
    P.col(3) = P3.col(2);
    m.yaw_uncontrollable = true;
  }
  m.pinv_scaled_G = Eigen::MatrixXd::Zero(m.n(), 4);
  for (int k = 0; k < h; ++k) m.pinv_scaled_G.row(healthy[k]) = P.row(k);
}

}  // namespace detail

inline EffectivenessModel build_effectiveness(const VehicleConfig& c) {
  c.validate();
  EffectivenessModel m;
  m.G.setZero(4, c.n);
  for (int i = 0; i < c.n; ++i) {
    double a = i * 2.0 * M_PI / c.n + c.upsilon;
    m.G(0, i) = c.arm_length_m[i] * c.kappa[i] * std::cos(a);
    m.G(1, i) = c.arm_length_m[i] * c.kappa[i] * std::sin(a);
    m.G(2, i) = c.spin_sign[i] * c.tau[i];
    m.G(3, i) = c.kappa[i];
  }
  Eigen::Vector4d scale(1.0 / c.inertia[0], 1.0 / c.inertia[1], 1.0 / c.inertia[2], 1.0 / c.mass);
  m.scaled_G = scale.asDiagonal() * m.G;
  m.u_lo = c.u_min();
  m.u_hi = c.u_max();
  detail::rebuild_pinv(m);
  return m;
}

inline EffectivenessModel apply_failure(const EffectivenessModel& model, int rotor_index) {
  if (rotor_index < 0 || rotor_index >= model.n())
    throw std::out_of_range("apply_failure: rotor index out of range");
  if (model.is_failed(rotor_index))
    throw std::invalid_argument("apply_failure: rotor already failed");
  EffectivenessModel m = model;
  m.failed_mask.insert(rotor_index);
  m.G.col(rotor_index).setZero();
  m.scaled_G.col(rotor_index).setZero();
  m.u_lo[rotor_index] = 0.0;
  m.u_hi[rotor_index] = 0.0;
  detail::rebuild_pinv(m);
  return m;
}

}  // namespace ftc
