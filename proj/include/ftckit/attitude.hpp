#pragma once
// Reduced attitude control on the sphere. The controlled quantity is the
// thrust direction, not the full attitude: h = R^B_I n^I_des is the desired
// direction expressed in body axes, and the tilt controller inverts the
// direction kinematics h_dot = -omega x h + R^B_I n^I_des_dot to find the
// body tilt rates (p, q) that steer h toward the body thrust axis (0,0,-1).
// Yaw rate r enters only as a known disturbance to compensate, which is what
// lets the same law fly a vehicle spinning continuously about its thrust
// axis. A rate loop then turns the tilt-rate setpoints into angular
// acceleration demands; it is purely proportional plus optional damping and
// feed-forward terms, with no integrator anywhere.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ftc {

struct RateGains {
  double k1 = 0.0, k2 = 0.0;      // tilt proportional gains, 1/s
  double Kp_p = 0.0, Kp_q = 0.0;  // rate proportional gains, 1/s
  double Kd_p = 0.0, Kd_q = 0.0;  // body-rate derivative gains
  double Kff_p = 0.0, Kff_q = 0.0;

  void validate() const {
    const double all[] = {k1, k2, Kp_p, Kp_q, Kd_p, Kd_q, Kff_p, Kff_q};
    for (double v : all)
      if (!std::isfinite(v)) throw std::invalid_argument("gains: non-finite");
    if (k1 <= 0.0 || k2 <= 0.0)
      throw std::invalid_argument("gains: k1 and k2 must be positive");
  }
};

struct ReducedAttitudeState {
  Eigen::Vector3d n_body_des;              // h, unit
  Eigen::Vector3d n_inertial_des;          // unit
  double yaw_rate = 0.0;                   // r, rad/s
  Eigen::Matrix3d dcm_body_from_inertial;  // R^B_I
};

// Builds the state from the attitude estimate and the desired inertial
// thrust direction; normalises the direction and checks the DCM.
inline ReducedAttitudeState reduced_attitude_state(
    const Eigen::Matrix3d& dcm_body_from_inertial,
    const Eigen::Vector3d& n_inertial_des, double yaw_rate) {
  const double nrm = n_inertial_des.norm();
  if (!(nrm > 1e-9) || !n_inertial_des.allFinite())
    throw std::invalid_argument("attitude: degenerate desired direction");
  const Eigen::Matrix3d& R = dcm_body_from_inertial;
  if (!R.allFinite() ||
      (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
          1e-6)
    throw std::invalid_argument("attitude: DCM not orthonormal");
  ReducedAttitudeState s;
  s.n_inertial_des = n_inertial_des / nrm;
  s.dcm_body_from_inertial = R;
  s.n_body_des = R * s.n_inertial_des;
  s.yaw_rate = yaw_rate;
  return s;
}

struct TiltCommand {
  double p_des = 0.0;
  double q_des = 0.0;
  bool guard_engaged = false;  // |h3| fell below the singularity guard
};

// Dynamic inversion of the thrust-direction kinematics:
//   p_des = ( nu2 + h1 r - d2) / h3
//   q_des = -( nu1 - h2 r - d1) / h3
// with nu = (-k1 h1, -k2 h2) and d = R^B_I n^I_des_dot. Near the h3
// singularity (thrust axis orthogonal to the target) the divisor is
// clamped at h3_min, preserving sign, and the sample is flagged.
inline TiltCommand tilt_controller(const ReducedAttitudeState& state,
                                   const RateGains& gains,
                                   const Eigen::Vector3d& n_inertial_des_dot,
                                   double h3_min = 0.2) {
  const Eigen::Vector3d& h = state.n_body_des;
  const Eigen::Vector3d d =
      state.dcm_body_from_inertial * n_inertial_des_dot;
  const double r = state.yaw_rate;
  TiltCommand out;
  double h3 = h[2];
  if (std::abs(h3) < h3_min) {
    h3 = std::copysign(h3_min, h3 != 0.0 ? h3 : -1.0);
    out.guard_engaged = true;
  }
  const double nu1 = -gains.k1 * h[0];
  const double nu2 = -gains.k2 * h[1];
  out.p_des = (nu2 + h[0] * r - d[1]) / h3;
  out.q_des = -(nu1 - h[1] * r - d[0]) / h3;
  return out;
}

// Proportional rate loop with optional measured-derivative and
// feed-forward terms; stateless by design.
inline Eigen::Vector2d rate_controller(double p_est, double q_est,
                                       double p_des, double q_des,
                                       double p_dot_meas, double q_dot_meas,
                                       const RateGains& gains) {
  return {gains.Kp_p * (p_des - p_est) + gains.Kd_p * p_dot_meas +
              gains.Kff_p * p_des,
          gains.Kp_q * (q_des - q_est) + gains.Kd_q * q_dot_meas +
              gains.Kff_q * q_des};
}

// Maps pilot stick deflections to a desired inertial thrust direction:
// full forward stick tilts the (0,0,-1) hover direction by max_tilt in the
// inertial x-z plane, full right stick in the y-z plane, diagonal sticks
// in between; deflection magnitude scales the tilt angle.
inline Eigen::Vector3d stick_to_direction(double roll_stick,
                                          double pitch_stick,
                                          double max_tilt) {
  if (!std::isfinite(roll_stick) || !std::isfinite(pitch_stick) ||
      std::abs(roll_stick) > 1.0 + 1e-9 || std::abs(pitch_stick) > 1.0 + 1e-9)
    throw std::invalid_argument("stick: deflection outside [-1, 1]");
  const double mag = std::hypot(roll_stick, pitch_stick);
  if (mag < 1e-12) return {0.0, 0.0, -1.0};
  const double tilt = std::min(mag, 1.0) * max_tilt;
  const double ux = pitch_stick / mag;  // forward stick -> +x
  const double uy = roll_stick / mag;   // right stick -> +y
  return {std::sin(tilt) * ux, std::sin(tilt) * uy, -std::cos(tilt)};
}

// First-order lag on the desired direction, with the exact derivative of
// the normalised output. Feeding that derivative to the tilt controller
// replaces the finite-difference kick of a raw stick step by a bounded,
// smoothly decaying feed-forward.
class DirectionFilter {
 public:
  explicit DirectionFilter(double time_constant_s,
                           const Eigen::Vector3d& initial = {0.0, 0.0, -1.0})
      : tau_(time_constant_s), m_(initial) {
    if (!(tau_ > 0.0) || !std::isfinite(tau_))
      throw std::invalid_argument("direction filter: bad time constant");
    const double n = m_.norm();
    if (!(n > 1e-9))
      throw std::invalid_argument("direction filter: degenerate initial");
    m_ /= n;
  }

  // Advances the filter by dt toward the raw target and returns the
  // filtered unit direction and its time derivative.
  void step(const Eigen::Vector3d& target, double dt,
            Eigen::Vector3d* n_des, Eigen::Vector3d* n_des_dot) {
    m_ += dt * (target - m_) / tau_;
    const Eigen::Vector3d m_dot = (target - m_) / tau_;  // at the new state
    const double nrm = m_.norm();
    if (nrm < 1e-9) {
      // Target passed exactly through the origin antipode; re-seed rather
      // than divide by zero. Cannot happen for tilt-limited sticks.
      m_ = Eigen::Vector3d(0.0, 0.0, -1.0);
      *n_des = m_;
      n_des_dot->setZero();
      return;
    }
    const Eigen::Vector3d n = m_ / nrm;
    *n_des = n;
    *n_des_dot = (m_dot - n * n.dot(m_dot)) / nrm;
  }

  const Eigen::Vector3d& raw_state() const { return m_; }

 private:
  double tau_;
  Eigen::Vector3d m_;
};

}  // namespace ftc
