#pragma once
// IMU lever-arm calibration from a spin log. An accelerometer mounted a
// vector r_v away from the rotation axis picks up Euler and centripetal
// terms on top of gravity; during a flat spin those terms masquerade as a
// constant tilt. Subtracting the prediction
//     a_hat = omega_dot x r_v + omega x (omega x r_v)
// and minimising the mean-square tilt-angle error over r_v recovers the
// offset. The minimisation is derivative-free: cyclic coordinate descent
// with golden-section line searches, which is robust to the noise-induced
// roughness of the cost and needs no gradient model.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ftckit/filters.hpp"

namespace ftc {

struct SpinLog {
  Eigen::VectorXd t;         // strictly increasing, s
  Eigen::MatrixXd gyro;      // S x 3, rad/s
  Eigen::MatrixXd gyro_dot;  // S x 3, rad/s^2 (differentiated, filtered)
  Eigen::MatrixXd accel;     // S x 3, specific force, m/s^2
};

// Builds the log from raw samples: central-difference differentiation of
// the gyro followed by the same low-pass used for identification.
inline SpinLog make_spin_log(const Eigen::VectorXd& t,
                             const Eigen::MatrixXd& gyro,
                             const Eigen::MatrixXd& accel,
                             double sample_rate_hz, double cutoff_hz = 25.0) {
  const int s = static_cast<int>(t.size());
  if (s < 16) throw std::invalid_argument("spin log: too short");
  if (gyro.rows() != s || accel.rows() != s || gyro.cols() != 3 ||
      accel.cols() != 3)
    throw std::invalid_argument("spin log: misaligned blocks");
  for (int k = 1; k < s; ++k)
    if (!(t[k] > t[k - 1]))
      throw std::invalid_argument("spin log: timestamps must increase");
  SpinLog log;
  log.t = t;
  log.gyro = gyro;
  log.accel = accel;
  Eigen::MatrixXd raw_dot(s, 3);
  for (int k = 0; k < s; ++k) {
    const int a = std::max(0, k - 1);
    const int b = std::min(s - 1, k + 1);
    raw_dot.row(k) = (gyro.row(b) - gyro.row(a)) / (t[b] - t[a]);
  }
  log.gyro_dot = butterworth_lowpass(raw_dot, cutoff_hz, sample_rate_hz);
  return log;
}

inline Eigen::Vector3d predict_lever_accel(const Eigen::Vector3d& omega,
                                           const Eigen::Vector3d& omega_dot,
                                           const Eigen::Vector3d& r_v) {
  return omega_dot.cross(r_v) + omega.cross(omega.cross(r_v));
}

// Angle between the corrected specific force and the static-rest reading
// direction (0,0,-1): zero when the sensor sees pure gravity upright.
inline double tilt_error(const Eigen::Vector3d& accel_corrected) {
  const double nrm = accel_corrected.norm();
  if (!(nrm > 1e-12) || !accel_corrected.allFinite())
    throw std::invalid_argument("tilt error: degenerate acceleration");
  const Eigen::Vector3d g_hat(0.0, 0.0, -1.0);
  const double dot = accel_corrected.dot(g_hat);
  const double crs = accel_corrected.cross(g_hat).norm();
  return std::atan2(crs, dot);
}

struct OffsetEstimate {
  Eigen::Vector3d r_v = Eigen::Vector3d::Zero();
  double cost = 0.0;          // mean squared tilt error at r_v, rad^2
  double cost_at_zero = 0.0;  // same cost with no correction
  // (mean spin rate, mean residual tilt) per chronological segment.
  std::vector<std::pair<double, double>> per_rate_bias;
  bool z_identifiable = false;
  Eigen::Vector3d curvature = Eigen::Vector3d::Zero();  // d2cost/dr2, per axis
};

namespace detail {

inline double spin_cost(const SpinLog& log, const Eigen::Vector3d& r_v,
                        bool absorb_constant_bias) {
  const int s = static_cast<int>(log.t.size());
  double sum = 0.0, sumsq = 0.0;
  for (int k = 0; k < s; ++k) {
    const Eigen::Vector3d corrected =
        log.accel.row(k).transpose() -
        predict_lever_accel(log.gyro.row(k), log.gyro_dot.row(k), r_v);
    const double eta = tilt_error(corrected);
    sum += eta;
    sumsq += eta * eta;
  }
  const double mean_sq = sumsq / s;
  if (!absorb_constant_bias) return mean_sq;
  // Subtract a small constant tilt offset (wobble bias). The offset is
  // clamped: an unbounded nuisance would let any estimate that tilts every
  // sample by the same large angle look perfect.
  const double beta = std::clamp(sum / s, -0.1, 0.1);
  return mean_sq - 2.0 * beta * (sum / s) + beta * beta;
}

inline double golden_section(const std::function<double(double)>& f,
                             double lo, double hi, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline OffsetEstimate estimate_offset(const SpinLog& log,
                                      bool absorb_constant_bias = false,
                                      double search_half_width_m = 0.25,
                                      double tol_m = 1e-5) {
  const int s = static_cast<int>(log.t.size());
  if (s < 16) throw std::invalid_argument("estimate: log too short");

  // Identifiability needs at least two distinct spin-rate plateaus: the
  // lever terms scale with rate squared, a constant wobble bias does not.
  const int segments = 8;
  std::vector<double> seg_rate(segments, 0.0);
  {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int g = 0; g < segments; ++g) {
      const int a = g * s / segments, b = (g + 1) * s / segments;
      double acc = 0.0;
      for (int k = a; k < b; ++k) acc += log.gyro.row(k).norm();
      seg_rate[g] = acc / std::max(1, b - a);
      lo = std::min(lo, seg_rate[g]);
      hi = std::max(hi, seg_rate[g]);
    }
    if (!(hi > 0.0) || (hi - lo) / hi < 0.05)
      throw std::runtime_error(
          "estimate: spin log covers a single rate; offset not identifiable");
  }

  OffsetEstimate est;
  est.cost_at_zero = detail::spin_cost(log, Eigen::Vector3d::Zero(),
                                       absorb_constant_bias);

  // The z component only becomes observable when the spin axis direction
  // itself moves; in a flat spin it multiplies a near-constant column.
  {
    Eigen::Vector3d mean_axis = Eigen::Vector3d::Zero();
    int used = 0;
    for (int k = 0; k < s; ++k) {
      const Eigen::Vector3d w = log.gyro.row(k).transpose();
      if (w.norm() > 1.0) {
        mean_axis += w.normalized();
        ++used;
      }
    }
    if (used > 0) {
      mean_axis.normalize();
      double max_dev = 0.0;
      for (int k = 0; k < s; ++k) {
        const Eigen::Vector3d w = log.gyro.row(k).transpose();
        if (w.norm() > 1.0)
          max_dev = std::max(
              max_dev, std::acos(std::clamp(
                           mean_axis.dot(w.normalized()), -1.0, 1.0)));
      }
      est.z_identifiable = max_dev > 0.1;
    }
  }

  const int axes = est.z_identifiable ? 3 : 2;
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  double best = est.cost_at_zero;
  for (int cycle = 0; cycle < 24; ++cycle) {
    const double before = best;
    for (int ax = 0; ax < axes; ++ax) {
      const auto line = [&](double v) {
        Eigen::Vector3d c = r;
        c[ax] = v;
        return detail::spin_cost(log, c, absorb_constant_bias);
      };
      // Fixed absolute box: a lever arm is a fraction of the airframe, and
      // anchoring the interval keeps the cyclic search from drifting.
      const double v = detail::golden_section(
          line, -search_half_width_m, search_half_width_m, tol_m);
      const double fv = line(v);
      if (fv < best) {
        best = fv;
        r[ax] = v;
      }
    }
    if (before - best < 1e-14) break;
  }
  est.r_v = r;
  est.cost = best;

  for (int g = 0; g < segments; ++g) {
    const int a = g * s / segments, b = (g + 1) * s / segments;
    double acc = 0.0;
    for (int k = a; k < b; ++k) {
      const Eigen::Vector3d corrected =
          log.accel.row(k).transpose() -
          predict_lever_accel(log.gyro.row(k), log.gyro_dot.row(k), r);
      acc += tilt_error(corrected);
    }
    est.per_rate_bias.emplace_back(seg_rate[g], acc / std::max(1, b - a));
  }

  // Per-axis cost curvature at the optimum: a vanishing value means the
  // axis was effectively unconstrained by this log.
  const double h = 1e-3;
  for (int ax = 0; ax < 3; ++ax) {
    Eigen::Vector3d p = r, m = r;
    p[ax] += h;
    m[ax] -= h;
    est.curvature[ax] = (detail::spin_cost(log, p, absorb_constant_bias) -
                         2.0 * best +
                         detail::spin_cost(log, m, absorb_constant_bias)) /
                        (h * h);
  }
  return est;
}

}  // namespace ftc
