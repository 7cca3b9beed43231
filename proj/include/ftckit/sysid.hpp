#pragma once
// Effectiveness identification from flight logs.
//
// The model being fit is linear in rotor speed-squared increments: each
// measurement channel y (angular acceleration increments about the three
// body axes, plus the negated vertical specific-force increment) is a fixed
// row of the scaled effectiveness matrix applied to Delta(omega^2),
// linearised as 2*diag(omega)*Delta(omega). All raw channels pass through
// one identical low-pass filter before differencing, so the filter cannot
// introduce relative phase between regressor and measurement; increments
// then cancel trims, gravity and other slowly varying terms.
//
// Fits run per axis: ordinary least squares for initialisation and batch
// duty, recursive least squares with a forgetting factor for sequential
// processing. With lambda = 1 and the Gram-matrix warm start the recursion
// extends the least-squares solution exactly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ftckit/filters.hpp"

namespace ftc {

struct IdentLog {
  double sample_rate_hz = 0.0;
  Eigen::MatrixXd omega;      // samples x n, rotor speeds, rad/s
  Eigen::MatrixXd gyro;       // samples x 3, body rates, rad/s
  Eigen::MatrixXd accel;      // samples x 3, specific force, m/s^2
  std::vector<bool> present;  // optional; empty means every sample present
};

struct IdentDataset {
  Eigen::MatrixXd x;          // samples x n, normalized regressors
  Eigen::MatrixXd y;          // samples x 4, normalized measurements
  Eigen::VectorXd x_scale;    // raw = normalized * scale, per channel
  Eigen::Vector4d y_scale;
  std::vector<bool> valid;    // usable rows (gap and warm-up mask)
  double sample_rate_hz = 0.0;

  int samples() const { return static_cast<int>(x.rows()); }
  int rotors() const { return static_cast<int>(x.cols()); }
  int valid_count() const {
    return static_cast<int>(std::count(valid.begin(), valid.end(), true));
  }
};

// Uniform resampling of a timestamped log column block by linear
// interpolation. Output samples that fall in or next to a hole longer than
// max_lost native samples are marked absent rather than interpolated.
inline void resample_linear(const Eigen::VectorXd& t, const Eigen::MatrixXd& v,
                            double native_hz, double target_hz, int max_lost,
                            Eigen::MatrixXd* out, std::vector<bool>* present) {
  const int s = static_cast<int>(t.size());
  if (s < 2 || v.rows() != s)
    throw std::invalid_argument("resample: need >= 2 timestamped samples");
  for (int i = 1; i < s; ++i)
    if (!(t[i] > t[i - 1]))
      throw std::invalid_argument("resample: timestamps must increase");
  const double t0 = t[0], t1 = t[s - 1];
  const int m = static_cast<int>(std::floor((t1 - t0) * target_hz)) + 1;
  out->resize(m, v.cols());
  present->assign(m, true);
  const double gap_limit = (max_lost + 1.5) / native_hz;
  int j = 0;
  for (int k = 0; k < m; ++k) {
    const double tk = t0 + k / target_hz;
    while (j + 2 < s && t[j + 1] < tk) ++j;
    const double dt = t[j + 1] - t[j];
    const double a = (tk - t[j]) / dt;
    out->row(k) = (1.0 - a) * v.row(j) + a * v.row(j + 1);
    if (dt > gap_limit) (*present)[k] = false;
  }
  return;
}

inline IdentDataset build_ident_dataset(const IdentLog& log,
                                        double cutoff_hz) {
  const int s = static_cast<int>(log.omega.rows());
  const int n = static_cast<int>(log.omega.cols());
  if (s < 8 || n < 1) throw std::invalid_argument("ident: log too short");
  if (log.gyro.rows() != s || log.accel.rows() != s ||
      log.gyro.cols() != 3 || log.accel.cols() != 3)
    throw std::invalid_argument("ident: misaligned log blocks");
  if (!log.present.empty() && static_cast<int>(log.present.size()) != s)
    throw std::invalid_argument("ident: present mask size mismatch");
  const double fs = log.sample_rate_hz;

  // One identical filter for every channel.
  Eigen::MatrixXd all(s, n + 4);
  all.leftCols(n) = log.omega;
  all.middleCols(n, 3) = log.gyro;
  all.col(n + 3) = -log.accel.col(2);  // thrust channel: climb-positive
  const Eigen::MatrixXd f = butterworth_lowpass(all, cutoff_hz, fs);

  IdentDataset d;
  d.sample_rate_hz = fs;
  d.x.resize(s, n);
  d.y.resize(s, 4);
  d.x.setZero();
  d.y.setZero();
  d.valid.assign(s, false);

  // Angular acceleration by backward difference of the filtered rates.
  Eigen::MatrixXd gyro_dot(s, 3);
  gyro_dot.setZero();
  for (int k = 1; k < s; ++k)
    gyro_dot.row(k) = (f.row(k).segment(n, 3) - f.row(k - 1).segment(n, 3)) * fs;

  // The filter is primed against DC, but the residual AC transient still
  // needs a few filter time constants to die off before rows are trusted.
  const int warmup =
      std::max(2, static_cast<int>(std::ceil(fs / cutoff_hz)));
  for (int k = 2; k < s; ++k) {
    for (int i = 0; i < n; ++i)
      d.x(k, i) = 2.0 * f(k, i) * (f(k, i) - f(k - 1, i));
    d.y.block(k, 0, 1, 3) = gyro_dot.row(k) - gyro_dot.row(k - 1);
    d.y(k, 3) = f(k, n + 3) - f(k - 1, n + 3);
    d.valid[k] = k >= warmup;
  }

  // Drop increments touching absent samples: a difference spanning a hole
  // is not a one-step increment curvature but a jump.
  if (!log.present.empty()) {
    for (int k = 0; k < s; ++k) {
      if (log.present[k]) continue;
      for (int j = std::max(0, k - 1); j < std::min(s, k + 3); ++j)
        d.valid[j] = false;
    }
  }

  // Per-channel normalization into [-1, 1] over usable rows.
  d.x_scale = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    double m = 0.0;
    for (int k = 0; k < s; ++k)
      if (d.valid[k]) m = std::max(m, std::abs(d.x(k, i)));
    if (m > 0.0) d.x_scale[i] = m;
  }
  for (int c = 0; c < 4; ++c) {
    double m = 0.0;
    for (int k = 0; k < s; ++k)
      if (d.valid[k]) m = std::max(m, std::abs(d.y(k, c)));
    d.y_scale[c] = m > 0.0 ? m : 1.0;
  }
  for (int i = 0; i < n; ++i) d.x.col(i) /= d.x_scale[i];
  for (int c = 0; c < 4; ++c) d.y.col(c) /= d.y_scale[c];
  return d;
}

// Stacks the valid rows only.
inline void dense_valid(const IdentDataset& d, Eigen::MatrixXd* X,
                        Eigen::MatrixXd* Y) {
  const int m = d.valid_count();
  X->resize(m, d.rotors());
  Y->resize(m, 4);
  int r = 0;
  for (int k = 0; k < d.samples(); ++k) {
    if (!d.valid[k]) continue;
    X->row(r) = d.x.row(k);
    Y->row(r) = d.y.row(k);
    ++r;
  }
}

struct OlsFit {
  Eigen::VectorXd A;  // normalized coefficients for one axis
  Eigen::MatrixXd P;  // (X'X)^-1 * var(residual)
  double condition = 0.0;
};

inline OlsFit ols_fit(const IdentDataset& d, int axis) {
  if (axis < 0 || axis > 3) throw std::out_of_range("ols: axis");
  Eigen::MatrixXd X, Y;
  dense_valid(d, &X, &Y);
  const int m = static_cast<int>(X.rows());
  const int n = static_cast<int>(X.cols());
  if (m < n + 2) throw std::invalid_argument("ols: not enough samples");
  const Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeThinU |
                                                  Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  OlsFit fit;
  fit.condition = smin > 0.0 ? smax / smin
                             : std::numeric_limits<double>::infinity();
  if (!(fit.condition < 1e8))
    throw std::runtime_error(
        "ols: regressors ill-conditioned (insufficient excitation)");
  const Eigen::MatrixXd gram_inv = svd.solve(Eigen::MatrixXd::Identity(n, n));
  fit.A = gram_inv * (X.transpose() * Y.col(axis));
  const Eigen::VectorXd resid = Y.col(axis) - X * fit.A;
  const double var = resid.squaredNorm() / (m - n);
  fit.P = gram_inv * var;
  return fit;
}

struct RlsState {
  Eigen::VectorXd A_hat;
  Eigen::MatrixXd P;
  double lambda = 1.0;
  double initial_trace = 0.0;
  bool divergence_flag = false;
  std::vector<double> residual_history;
};

inline RlsState rls_init(int n, double lambda = 1.0, double p0 = 1e4) {
  if (!(lambda > 0.0) || lambda > 1.0)
    throw std::invalid_argument("rls: lambda must lie in (0, 1]");
  RlsState s;
  s.A_hat = Eigen::VectorXd::Zero(n);
  s.P = p0 * Eigen::MatrixXd::Identity(n, n);
  s.lambda = lambda;
  s.initial_trace = s.P.trace();
  return s;
}

// Seeds the recursion from a least-squares prefix fit. The covariance is
// the plain Gram inverse (no residual-variance factor): that is the
// information-matrix form under which the lambda = 1 recursion reproduces
// batch least squares on prefix + remainder exactly.
inline RlsState rls_warm_start(const IdentDataset& d, int axis, int count,
                               double lambda = 1.0) {
  if (!(lambda > 0.0) || lambda > 1.0)
    throw std::invalid_argument("rls: lambda must lie in (0, 1]");
  Eigen::MatrixXd X, Y;
  dense_valid(d, &X, &Y);
  const int n = static_cast<int>(X.cols());
  if (count < n || count > X.rows())
    throw std::invalid_argument("rls: warm-start prefix too small");
  const Eigen::MatrixXd Xp = X.topRows(count);
  const Eigen::MatrixXd gram = Xp.transpose() * Xp;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeThinU |
                                                  Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 0.0) || svd.singularValues().maxCoeff() / smin >= 1e8)
    throw std::runtime_error("rls: warm-start prefix ill-conditioned");
  RlsState s;
  s.P = svd.solve(Eigen::MatrixXd::Identity(n, n));
  s.P = 0.5 * (s.P + s.P.transpose()).eval();
  s.A_hat = s.P * (Xp.transpose() * Y.col(axis).head(count));
  s.lambda = lambda;
  s.initial_trace = s.P.trace();
  return s;
}

// One recursive update. A zero regressor carries no information and leaves
// the state untouched (in particular it does not inflate the covariance
// through the forgetting factor). Returns the prediction residual.
inline double rls_update(RlsState& s, const Eigen::VectorXd& x_t, double y_t,
                         double lambda_override = -1.0) {
  const double lam = lambda_override > 0.0 ? lambda_override : s.lambda;
  if (!(lam > 0.0) || lam > 1.0)
    throw std::invalid_argument("rls: lambda must lie in (0, 1]");
  if (x_t.size() != s.A_hat.size())
    throw std::invalid_argument("rls: regressor size mismatch");
  const double eps = y_t - x_t.dot(s.A_hat);
  if (x_t.isZero(0.0)) {
    s.residual_history.push_back(eps);
    return eps;
  }
  const Eigen::VectorXd Px = s.P * x_t;
  const double denom = lam + x_t.dot(Px);
  const Eigen::VectorXd K = Px / denom;
  s.A_hat += K * eps;
  s.P = (s.P - (Px * Px.transpose()) / denom) / lam;
  s.P = 0.5 * (s.P + s.P.transpose()).eval();
  if (s.P.trace() > 1e6 * s.initial_trace) s.divergence_flag = true;
  s.residual_history.push_back(eps);
  return eps;
}

struct ResidualReport {
  Eigen::Vector4d r_squared;
  Eigen::Vector4d residual_mean;
  Eigen::MatrixXd histogram;    // 4 x bins, held-out residual counts
  Eigen::Vector4d hist_lo, hist_hi;
  double diagonality_ratio = 0.0;  // min diag / max |offdiag| of X'X
  bool diagonally_dominant_10x = false;
  int fit_samples = 0;
  int holdout_samples = 0;
};

// Evaluates a fitted coefficient matrix (4 x n, normalized units) on the
// chronologically last fraction of the dataset.
inline ResidualReport residual_report(const IdentDataset& d,
                                      const Eigen::MatrixXd& A_hat,
                                      double holdout_fraction = 0.2,
                                      int bins = 21) {
  if (A_hat.rows() != 4 || A_hat.cols() != d.rotors())
    throw std::invalid_argument("residuals: A_hat must be 4 x rotors");
  if (!(holdout_fraction > 0.0) || holdout_fraction >= 1.0)
    throw std::invalid_argument("residuals: bad holdout fraction");
  Eigen::MatrixXd X, Y;
  dense_valid(d, &X, &Y);
  const int m = static_cast<int>(X.rows());
  const int hold = std::max(1, static_cast<int>(std::lround(m * holdout_fraction)));
  const int fit = m - hold;
  if (fit < 1) throw std::invalid_argument("residuals: dataset too small");

  ResidualReport rep;
  rep.fit_samples = fit;
  rep.holdout_samples = hold;
  rep.histogram = Eigen::MatrixXd::Zero(4, bins);

  const Eigen::MatrixXd Xh = X.bottomRows(hold);
  const Eigen::MatrixXd Yh = Y.bottomRows(hold);
  const Eigen::MatrixXd E = Yh - Xh * A_hat.transpose();
  for (int c = 0; c < 4; ++c) {
    const double mean_y = Yh.col(c).mean();
    const double var_y =
        (Yh.col(c).array() - mean_y).square().sum() / hold;
    const double var_e = E.col(c).array().square().sum() / hold;
    rep.r_squared[c] = var_y > 0.0 ? 1.0 - var_e / var_y : 0.0;
    rep.residual_mean[c] = E.col(c).mean();
    const double sd = std::sqrt(std::max(var_e, 1e-300));
    rep.hist_lo[c] = -4.0 * sd;
    rep.hist_hi[c] = 4.0 * sd;
    for (int k = 0; k < hold; ++k) {
      const double a = (E(k, c) - rep.hist_lo[c]) /
                       (rep.hist_hi[c] - rep.hist_lo[c]);
      const int b = std::clamp(static_cast<int>(a * bins), 0, bins - 1);
      rep.histogram(c, b) += 1.0;
    }
  }

  const Eigen::MatrixXd gram = X.topRows(fit).transpose() * X.topRows(fit);
  double mindiag = std::numeric_limits<double>::infinity(), maxoff = 0.0;
  for (int i = 0; i < gram.rows(); ++i) {
    mindiag = std::min(mindiag, gram(i, i));
    for (int j = 0; j < gram.cols(); ++j)
      if (i != j) maxoff = std::max(maxoff, std::abs(gram(i, j)));
  }
  rep.diagonality_ratio = maxoff > 0.0
                              ? mindiag / maxoff
                              : std::numeric_limits<double>::infinity();
  rep.diagonally_dominant_10x = rep.diagonality_ratio >= 10.0;
  return rep;
}

// Converts one axis of normalized coefficients back to raw units.
inline Eigen::VectorXd denormalize_axis(const IdentDataset& d,
                                        const Eigen::VectorXd& a_norm,
                                        int axis) {
  Eigen::VectorXd a = a_norm * d.y_scale[axis];
  for (int i = 0; i < a.size(); ++i) a[i] /= d.x_scale[i];
  return a;
}

struct IdentifiedModel {
  Eigen::MatrixXd A_normalized;  // 4 x n
  Eigen::MatrixXd A_raw;         // 4 x n, same units as the scaled model
  ResidualReport report;
  double lambda = 1.0;
  bool any_divergence = false;
};

// Full pipeline: warm start on a prefix, RLS over the remainder, residual
// report on the held-out tail.
inline IdentifiedModel identify(const IdentDataset& d, double lambda = 1.0,
                                double warm_fraction = 0.25) {
  const int n = d.rotors();
  Eigen::MatrixXd X, Y;
  dense_valid(d, &X, &Y);
  const int m = static_cast<int>(X.rows());
  const int warm = std::max(n + 2, static_cast<int>(std::lround(m * warm_fraction)));
  if (warm >= m) throw std::invalid_argument("identify: dataset too small");
  IdentifiedModel out;
  out.lambda = lambda;
  out.A_normalized.resize(4, n);
  out.A_raw.resize(4, n);
  for (int axis = 0; axis < 4; ++axis) {
    RlsState s = rls_warm_start(d, axis, warm, lambda);
    for (int k = warm; k < m; ++k)
      rls_update(s, X.row(k).transpose(), Y(k, axis));
    out.A_normalized.row(axis) = s.A_hat.transpose();
    out.A_raw.row(axis) = denormalize_axis(d, s.A_hat, axis).transpose();
    out.any_divergence |= s.divergence_flag;
  }
  out.report = residual_report(d, out.A_normalized);
  return out;
}

}  // namespace ftc
