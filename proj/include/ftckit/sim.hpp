#pragma once
// Rigid-body multirotor plant with first-order rotor lag, rotor
// gyroscopic/reaction torques, an IMU measurement model with lever-arm
// offset, and a gated complementary attitude filter.
//
// Conventions: the inertial frame has z pointing down (gravity is +z), the
// body z axis points down through the airframe and thrust acts along -z in
// the body frame. `dcm_inertial_from_body` maps body vectors into the
// inertial frame. Commands are squared rotor speeds, matching the allocator.
// Aerodynamic forces and moments are intentionally zero: the plant models
// the powertrain and rigid-body terms only.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ftckit/calibration.hpp"
#include "ftckit/vehicle.hpp"

namespace ftc {

inline constexpr double kGravity = 9.81;  // m/s^2

inline Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Nearest rotation matrix (polar decomposition). Applied after every
// integration step so the DCM never accumulates drift away from SO(3).
inline Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  if ((U * svd.matrixV().transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * svd.matrixV().transpose();
}

inline Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& theta) {
  double a = theta.norm();
  if (a < 1e-300) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(a, theta / a).toRotationMatrix();
}

// Angle between the body z axes of two attitudes; the roll/pitch part of the
// attitude error, insensitive to yaw.
inline double tilt_angle_between(const Eigen::Matrix3d& dcm_a, const Eigen::Matrix3d& dcm_b) {
  double c = dcm_a.row(2).dot(dcm_b.row(2));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Angle of the thrust axis away from straight up.
inline double tilt_from_vertical(const Eigen::Matrix3d& dcm_inertial_from_body) {
  return std::acos(std::clamp(dcm_inertial_from_body(2, 2), -1.0, 1.0));
}

struct StateVector {
  Eigen::Matrix3d dcm_inertial_from_body = Eigen::Matrix3d::Identity();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();     // body rates, rad/s
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // inertial, m/s
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // inertial, m
  Eigen::VectorXd rotor_speed;                         // rad/s, per rotor

  bool all_finite() const {
    return dcm_inertial_from_body.allFinite() && omega.allFinite() && velocity.allFinite() &&
           position.allFinite() && rotor_speed.allFinite();
  }
};

struct StateDerivative {
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // inertial, includes gravity
  Eigen::VectorXd rotor_accel;
};

// Physical plant parameters, precomputed once from a vehicle config so the
// inner integration loop does no allocation or factorization.
struct SimModel {
  Eigen::MatrixXd G;        // 4 x n effectiveness of the healthy airframe
  Eigen::Vector3d inertia;  // diagonal body inertia
  Eigen::VectorXd spin_sign;
  Eigen::VectorXd omega_max;
  double mass = 0.0;
  double rotor_inertia_zz = 0.0;
  double tau_m = 0.03;  // motor lag time constant, s

  int n() const { return static_cast<int>(G.cols()); }
};

inline SimModel make_sim_model(const VehicleConfig& config, double tau_m = 0.03) {
  if (!(tau_m > 0.0)) throw std::invalid_argument("make_sim_model: tau_m must be positive");
  SimModel m;
  m.G = build_effectiveness(config).G;
  m.inertia = config.inertia;
  m.spin_sign = config.spin_sign;
  m.omega_max = config.omega_max;
  m.mass = config.mass;
  m.rotor_inertia_zz = config.rotor_inertia_zz;
  m.tau_m = tau_m;
  return m;
}

// Continuous-time dynamics at one state under a zero-order-hold command.
// Failed rotors are represented by commanding them to zero: the speed then
// decays through the same motor lag as any other command change.
inline StateDerivative eval_derivative(const StateVector& s, const Eigen::VectorXd& u_cmd,
                                       const SimModel& m) {
  const int n = m.n();
  StateDerivative d;
  d.rotor_accel.resize(n);
  Eigen::VectorXd u_act(n);
  for (int i = 0; i < n; ++i) {
    double target = std::sqrt(std::clamp(u_cmd[i], 0.0, m.omega_max[i] * m.omega_max[i]));
    d.rotor_accel[i] = (target - s.rotor_speed[i]) / m.tau_m;
    u_act[i] = s.rotor_speed[i] * s.rotor_speed[i];
  }
  Eigen::Vector4d wrench = m.G * u_act;  // roll, pitch, yaw moment; total thrust
  Eigen::Vector3d M = wrench.head<3>();
  // Rotor angular momentum: gyroscopic cross terms plus spin-up reaction yaw.
  for (int i = 0; i < n; ++i)
    M -= m.spin_sign[i] * m.rotor_inertia_zz *
         Eigen::Vector3d(s.omega.y() * s.rotor_speed[i], -s.omega.x() * s.rotor_speed[i],
                         d.rotor_accel[i]);
  Eigen::Vector3d Iw = m.inertia.cwiseProduct(s.omega);
  d.omega_dot = (M - s.omega.cross(Iw)).cwiseQuotient(m.inertia);
  d.accel = Eigen::Vector3d(0.0, 0.0, kGravity) +
            s.dcm_inertial_from_body * Eigen::Vector3d(0.0, 0.0, -wrench[3]) / m.mass;
  return d;
}

namespace detail {

struct StateSlope {
  Eigen::Matrix3d dcm_dot;
  Eigen::Vector3d omega_dot, accel, velocity;
  Eigen::VectorXd rotor_accel;
};

inline StateSlope state_slope(const StateVector& s, const Eigen::VectorXd& u_cmd,
                              const SimModel& m, StateDerivative* deriv_out) {
  StateDerivative d = eval_derivative(s, u_cmd, m);
  if (deriv_out) *deriv_out = d;
  return {s.dcm_inertial_from_body * hat(s.omega), d.omega_dot, d.accel, s.velocity,
          d.rotor_accel};
}

inline StateVector state_add(const StateVector& s, const StateSlope& k, double h) {
  StateVector out = s;
  out.dcm_inertial_from_body += h * k.dcm_dot;
  out.omega += h * k.omega_dot;
  out.velocity += h * k.accel;
  out.position += h * k.velocity;
  out.rotor_speed += h * k.rotor_accel;
  return out;
}

}  // namespace detail

// One RK4 step. The DCM is integrated in the embedding space and projected
// back onto SO(3) afterwards; rotor speeds are clamped to their physical
// range. `deriv_out`, when given, receives the derivative at the *start* of
// the step, which is what an IMU sampled at that instant would feel.
inline StateVector step_dynamics(const StateVector& s, const Eigen::VectorXd& u_cmd, double dt,
                                 const SimModel& m, StateDerivative* deriv_out = nullptr) {
  if (!(dt > 0.0) || dt > 0.01 + 1e-12)
    throw std::invalid_argument("step_dynamics: dt must be in (0, 0.01] s");
  if (u_cmd.size() != m.n())
    throw std::invalid_argument("step_dynamics: command size does not match rotor count");
  if (!u_cmd.allFinite()) throw std::invalid_argument("step_dynamics: non-finite command");
  if (s.rotor_speed.size() != m.n())
    throw std::invalid_argument("step_dynamics: state rotor count does not match model");

  using detail::state_add;
  using detail::state_slope;
  detail::StateSlope k1 = state_slope(s, u_cmd, m, deriv_out);
  detail::StateSlope k2 = state_slope(state_add(s, k1, dt / 2), u_cmd, m, nullptr);
  detail::StateSlope k3 = state_slope(state_add(s, k2, dt / 2), u_cmd, m, nullptr);
  detail::StateSlope k4 = state_slope(state_add(s, k3, dt), u_cmd, m, nullptr);

  StateVector out = s;
  out.dcm_inertial_from_body +=
      dt / 6.0 * (k1.dcm_dot + 2.0 * k2.dcm_dot + 2.0 * k3.dcm_dot + k4.dcm_dot);
  out.omega += dt / 6.0 * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot);
  out.velocity += dt / 6.0 * (k1.accel + 2.0 * k2.accel + 2.0 * k3.accel + k4.accel);
  out.position +=
      dt / 6.0 * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
  out.rotor_speed +=
      dt / 6.0 * (k1.rotor_accel + 2.0 * k2.rotor_accel + 2.0 * k3.rotor_accel + k4.rotor_accel);

  out.dcm_inertial_from_body = orthonormalized(out.dcm_inertial_from_body);
  for (int i = 0; i < m.n(); ++i)
    out.rotor_speed[i] = std::clamp(out.rotor_speed[i], 0.0, m.omega_max[i]);
  if (!out.all_finite()) throw std::runtime_error("step_dynamics: non-finite state, aborting run");
  return out;
}

struct ImuModel {
  Eigen::Vector3d lever_arm = Eigen::Vector3d::Zero();  // IMU position in body frame, m
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();
  double gyro_noise_sd = 0.0;   // rad/s per sample
  double accel_noise_sd = 0.0;  // m/s^2 per sample
  double sample_rate_hz = 500.0;
};

struct SensorFrame {
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
  double timestamp = 0.0;
};

// Strapdown measurement at an IMU mounted `lever_arm` away from the center of
// mass. The accelerometer feels the specific force at its own location:
// centripetal and angular-acceleration terms appear as soon as the body
// rotates. Draw order (gyro xyz, then accel xyz) is fixed so seeded reruns
// are identical.
inline SensorFrame sample_imu(const StateVector& s, const StateDerivative& d, const ImuModel& imu,
                              std::mt19937_64& rng, double timestamp) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d f_cg = s.dcm_inertial_from_body.transpose() *
                         (d.accel - Eigen::Vector3d(0.0, 0.0, kGravity));
  Eigen::Vector3d f = f_cg + predict_lever_accel(s.omega, d.omega_dot, imu.lever_arm);
  SensorFrame out;
  out.timestamp = timestamp;
  for (int i = 0; i < 3; ++i) out.gyro[i] = s.omega[i] + imu.gyro_bias[i] + imu.gyro_noise_sd * gauss(rng);
  for (int i = 0; i < 3; ++i) out.accel[i] = f[i] + imu.accel_bias[i] + imu.accel_noise_sd * gauss(rng);
  return out;
}

struct EstimatorConfig {
  double accel_weight = 0.002;     // tilt-correction fraction per accepted sample
  double gate_half_width_g = 0.1;  // accept when | ||a|| - g | <= this * g
  bool calibrated = false;         // subtract the lever-arm prediction before gating
  Eigen::Vector3d lever_arm = Eigen::Vector3d::Zero();
};

// Complementary attitude filter: dead-reckons the gyro on the rotation group
// and pulls the tilt toward the accelerometer "down" with a small weight, but
// only when the measured magnitude is close to 1 g. In `calibrated` mode the
// lever-arm acceleration predicted from the gyro (and its finite-difference
// derivative) is removed first, which is what keeps the gate open on a
// fast-spinning airframe.
class ComplementaryFilter {
 public:
  explicit ComplementaryFilter(const EstimatorConfig& cfg = {},
                               const Eigen::Matrix3d& initial_dcm = Eigen::Matrix3d::Identity())
      : cfg_(cfg), R_(initial_dcm) {
    if (!(cfg.accel_weight >= 0.0 && cfg.accel_weight <= 1.0) ||
        !(cfg.gate_half_width_g > 0.0) || !cfg.lever_arm.allFinite())
      throw std::invalid_argument("complementary_filter: bad config");
  }

  void reset(const Eigen::Matrix3d& dcm) {
    R_ = dcm;
    has_last_ = false;
    gate_total_ = gate_accepted_ = 0;
  }

  void step(const SensorFrame& f) {
    if (!has_last_) {  // first frame only seeds the propagation clock
      last_ = f;
      has_last_ = true;
      return;
    }
    double dt = f.timestamp - last_.timestamp;
    if (!(dt > 0.0)) throw std::invalid_argument("complementary_filter: non-increasing timestamps");
    R_ = R_ * rotation_exp(f.gyro * dt);

    Eigen::Vector3d a = f.accel;
    if (cfg_.calibrated) {
      Eigen::Vector3d omega_dot = (f.gyro - last_.gyro) / dt;
      a -= predict_lever_accel(f.gyro, omega_dot, cfg_.lever_arm);
    }
    ++gate_total_;
    if (std::abs(a.norm() - kGravity) <= cfg_.gate_half_width_g * kGravity) {
      ++gate_accepted_;
      Eigen::Vector3d down_meas = -a.normalized();
      Eigen::Vector3d down_est = R_.row(2).transpose();
      R_ = R_ * rotation_exp(cfg_.accel_weight * down_meas.cross(down_est));
    }
    R_ = orthonormalized(R_);
    last_ = f;
  }

  const Eigen::Matrix3d& dcm() const { return R_; }
  long gate_total() const { return gate_total_; }
  long gate_accepted() const { return gate_accepted_; }
  double gate_acceptance() const {
    return gate_total_ ? static_cast<double>(gate_accepted_) / static_cast<double>(gate_total_) : 0.0;
  }

 private:
  EstimatorConfig cfg_;
  Eigen::Matrix3d R_;
  SensorFrame last_;
  bool has_last_ = false;
  long gate_total_ = 0, gate_accepted_ = 0;
};

}  // namespace ftc
