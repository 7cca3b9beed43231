#pragma once
// Rotor command allocation with priority-ordered desaturation.
//
// The raw command is the pseudo-inverse image of the demand vector
// [roll accel, pitch accel, yaw accel, specific thrust]. When that lands
// outside the actuator box, axes are sacrificed lowest priority first:
// first yaw, then total thrust, and only as a last resort the tilt
// moments. Each sacrifice pass shifts the command along the pseudo-inverse
// column for that axis, which by construction changes only that axis of
// the produced wrench; the shift gain is the sum of the most-negative and
// most-positive per-rotor corrections, so one pass resolves a one-sided
// violation exactly and splits a two-sided one.
//
// If yaw and thrust together cannot restore feasibility, a small LP looks
// for any command in the box that produces the demanded roll and pitch
// exactly while minimising the thrust error. Only when that LP is
// infeasible -- the tilt demand is truly outside the attainable set -- do
// the pitch and roll passes run, followed by a hard clamp.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ftckit/linprog.hpp"
#include "ftckit/vehicle.hpp"

namespace ftc {

struct AllocationResult {
  Eigen::VectorXd u;             // rotor speed-squared commands, inside the box
  bool saturated = false;        // any desaturation pass moved the command
  bool used_fallback_lp = false; // tilt-preserving LP produced the command
  bool tilt_infeasible = false;  // roll/pitch demand unattainable in the box
};

namespace detail {

// Gain for one desaturation pass: u + gain * dir should pull violating
// rotors back toward their bounds. Entries of dir below the relative
// guard are treated as zero so a disabled axis (all-zero column) is a
// clean no-op.
inline double desaturation_gain(const Eigen::VectorXd& u,
                                const Eigen::VectorXd& dir,
                                const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi) {
  const double guard =
      std::max(1e-12, 1e-9 * dir.cwiseAbs().maxCoeff());
  double k_min = 0.0, k_max = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    if (std::abs(dir[i]) < guard) continue;
    double k;
    if (u[i] < lo[i])
      k = (lo[i] - u[i]) / dir[i];
    else if (u[i] > hi[i])
      k = (hi[i] - u[i]) / dir[i];
    else
      continue;
    k_min = std::min(k_min, k);
    k_max = std::max(k_max, k);
  }
  return k_min + k_max;
}

inline bool inside_box(const Eigen::VectorXd& u, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, double tol) {
  for (int i = 0; i < u.size(); ++i)
    if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
  return true;
}

}  // namespace detail

inline AllocationResult allocate(const EffectivenessModel& model,
                                 const Eigen::Vector4d& demand) {
  const int n = model.n();
  if (n == 0) throw std::invalid_argument("allocate: empty model");
  for (int k = 0; k < 4; ++k)
    if (!std::isfinite(demand[k]))
      throw std::invalid_argument("allocate: non-finite demand");

  const Eigen::MatrixXd& Gs = model.scaled_G;
  const Eigen::MatrixXd& P = model.pinv_scaled_G;
  const Eigen::VectorXd& lo = model.u_lo;
  const Eigen::VectorXd& hi = model.u_hi;

  AllocationResult out;
  out.u = P * demand;

  // Yaw first, then thrust.
  for (int axis : {2, 3}) {
    const double g = detail::desaturation_gain(out.u, P.col(axis), lo, hi);
    if (g != 0.0) {
      out.u += g * P.col(axis);
      out.saturated = true;
    }
  }
  if (detail::inside_box(out.u, lo, hi, 1e-9)) {
    out.u = out.u.cwiseMax(lo).cwiseMin(hi);
    return out;
  }

  // Tilt-preserving fallback: reproduce roll and pitch exactly, minimise
  // |thrust error| via an epigraph variable, leave yaw free.
  {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c[n] = -1.0;  // solve_lp maximises; -t minimises the epigraph bound
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, n + 1);
    Eigen::VectorXd b(4);
    std::vector<char> rel(4);
    A.block(0, 0, 1, n) = Gs.row(0);
    b[0] = demand[0];
    rel[0] = '=';
    A.block(1, 0, 1, n) = Gs.row(1);
    b[1] = demand[1];
    rel[1] = '=';
    A.block(2, 0, 1, n) = Gs.row(3);
    A(2, n) = -1.0;
    b[2] = demand[3];
    rel[2] = '<';
    A.block(3, 0, 1, n) = -Gs.row(3);
    A(3, n) = -1.0;
    b[3] = -demand[3];
    rel[3] = '<';
    Eigen::VectorXd vlo(n + 1), vhi(n + 1);
    vlo.head(n) = lo;
    vhi.head(n) = hi;
    vlo[n] = 0.0;
    vhi[n] = detail::kInf;
    const LpResult lp = solve_lp(c, A, rel, b, vlo, vhi);
    if (lp.status == LpStatus::Optimal) {
      out.u = lp.x.head(n).cwiseMax(lo).cwiseMin(hi);
      out.saturated = true;
      out.used_fallback_lp = true;
      return out;
    }
  }

  // Tilt demand is unattainable: sacrifice pitch, then roll, then clamp.
  out.tilt_infeasible = true;
  out.saturated = true;
  for (int axis : {1, 0}) {
    const double g = detail::desaturation_gain(out.u, P.col(axis), lo, hi);
    if (g != 0.0) out.u += g * P.col(axis);
  }
  out.u = out.u.cwiseMax(lo).cwiseMin(hi);
  return out;
}

struct ShapedCommand {
  Eigen::VectorXd u;
  double tilt_scale = 1.0;  // fraction of the tilt increment that fit
  bool saturated = false;
};

// Flight-loop variant used inside the control loop. allocate() reproduces a
// feasible tilt demand at any cost to yaw and thrust, which is the right
// contract for an allocator but the wrong one for an inner loop: a spinning,
// rotor-out vehicle routinely produces tilt-rate demands far beyond the box,
// and sacrificing thrust to chase them drops the vehicle. Here yaw and
// thrust are allocated first; the tilt increment is then scaled uniformly
// into the remaining actuator room, so an oversized correction keeps its
// direction and the loop degrades gracefully. The priority passes run last
// as a safety net for the corners the scaling cannot see.
inline ShapedCommand shape_command(const EffectivenessModel& model,
                                   const Eigen::Vector4d& demand) {
  const int n = model.n();
  if (n == 0) throw std::invalid_argument("shape_command: empty model");
  for (int k = 0; k < 4; ++k)
    if (!std::isfinite(demand[k]))
      throw std::invalid_argument("shape_command: non-finite demand");
  const Eigen::MatrixXd& P = model.pinv_scaled_G;
  const Eigen::VectorXd& lo = model.u_lo;
  const Eigen::VectorXd& hi = model.u_hi;

  const Eigen::VectorXd u_ty =
      P * Eigen::Vector4d(0.0, 0.0, demand[2], demand[3]);
  const Eigen::VectorXd u_pq =
      P * Eigen::Vector4d(demand[0], demand[1], 0.0, 0.0);

  ShapedCommand out;
  if (detail::inside_box(u_ty, lo, hi, 1e-9)) {
    const double guard =
        std::max(1e-12, 1e-9 * u_pq.cwiseAbs().maxCoeff());
    double gamma = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(u_pq[i]) < guard) continue;
      const double room = u_pq[i] > 0.0 ? hi[i] - u_ty[i] : lo[i] - u_ty[i];
      gamma = std::min(gamma, std::max(room / u_pq[i], 0.0));
    }
    out.tilt_scale = gamma;
    out.u = u_ty + gamma * u_pq;
    if (gamma < 1.0) out.saturated = true;
  } else {
    // Yaw+thrust alone already violates the box; let the passes sort it out.
    out.u = u_ty + u_pq;
    out.saturated = true;
  }

  for (int axis : {2, 3, 1, 0}) {
    const double g = detail::desaturation_gain(out.u, P.col(axis), lo, hi);
    if (g != 0.0) {
      out.u += g * P.col(axis);
      out.saturated = true;
    }
  }
  out.u = out.u.cwiseMax(lo).cwiseMin(hi);
  return out;
}

// Feasibility oracle used by the tests: can any command in the box produce
// the demanded roll and pitch accelerations exactly, with yaw and thrust
// free? Failed rotors are pinned by the model's bounds.
inline bool tilt_demand_feasible(const EffectivenessModel& model, double roll,
                                 double pitch) {
  const int n = model.n();
  Eigen::MatrixXd A(2, n);
  A.row(0) = model.scaled_G.row(0);
  A.row(1) = model.scaled_G.row(1);
  Eigen::Vector2d b(roll, pitch);
  const LpResult lp = solve_lp(Eigen::VectorXd::Zero(n), A, {'=', '='}, b,
                               model.u_lo, model.u_hi);
  return lp.status == LpStatus::Optimal;
}

}  // namespace ftc
