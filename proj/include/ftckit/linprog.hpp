#pragma once
// Dense bounded-variable two-phase simplex. Sized for the toolkit's needs:
// a handful of rows (moment/thrust equalities, yaw bounds) over at most a
// dozen variables, where exactness and determinism matter more than speed.
// Bland's rule on both the entering and leaving choice, so no cycling; the
// basis is refactorized every iteration, which is nothing at these sizes.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ftc {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;       // structural variables only
  double objective = 0.0;  // c'x at the optimum
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class BoundedSimplex {
 public:
  // Equality form A x = b, lo <= x <= hi. Columns ordered structural,
  // slack, artificial; nt is the total count.
  Eigen::MatrixXd A;
  Eigen::VectorXd b, lo, hi, c;
  int m = 0, nt = 0;
  std::vector<int> basis;     // one variable index per row
  std::vector<int> state;     // per var: 0 basic, -1 at lo, +1 at hi, 2 free at 0
  Eigen::VectorXd x;

  void place_nonbasic(int j) {
    if (std::isfinite(lo[j])) {
      state[j] = -1;
      x[j] = lo[j];
    } else if (std::isfinite(hi[j])) {
      state[j] = +1;
      x[j] = hi[j];
    } else {
      state[j] = 2;
      x[j] = 0.0;
    }
  }

  void recompute_basic_values() {
    Eigen::VectorXd rhs = b;
    for (int j = 0; j < nt; ++j)
      if (state[j] != 0 && x[j] != 0.0) rhs -= A.col(j) * x[j];
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = A.col(basis[i]);
    Eigen::VectorXd xb = B.partialPivLu().solve(rhs);
    for (int i = 0; i < m; ++i) x[basis[i]] = xb[i];
  }

  // Simplex iterations on the current objective (maximization).
  // Returns false when unbounded above.
  bool iterate(int max_iter = 5000) {
    const double cost_tol = 1e-9 * (1.0 + c.cwiseAbs().maxCoeff());
    const double piv_tol = 1e-11;
    for (int iter = 0; iter < max_iter; ++iter) {
      Eigen::MatrixXd B(m, m);
      for (int i = 0; i < m; ++i) B.col(i) = A.col(basis[i]);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
      Eigen::VectorXd cb(m);
      for (int i = 0; i < m; ++i) cb[i] = c[basis[i]];
      Eigen::VectorXd y = lu.transpose().solve(cb);

      // Entering: Bland, smallest eligible index.
      int enter = -1, dir = 0;
      for (int j = 0; j < nt && enter < 0; ++j) {
        if (state[j] == 0) continue;
        if (lo[j] == hi[j]) continue;  // pinned
        double d = c[j] - y.dot(A.col(j));
        if ((state[j] == -1 || state[j] == 2) && d > cost_tol) {
          enter = j;
          dir = +1;
        } else if ((state[j] == +1 || state[j] == 2) && d < -cost_tol) {
          enter = j;
          dir = -1;
        }
      }
      if (enter < 0) return true;  // optimal

      Eigen::VectorXd w = lu.solve(A.col(enter));

      // Ratio test: entering moves by t*dir, basic i changes by -w_i*dir*t.
      double t_best = kInf;
      int leave_pos = -1;   // -1 means bound flip of the entering variable
      int leave_hit = 0;    // bound the leaving variable lands on
      if (std::isfinite(lo[enter]) && std::isfinite(hi[enter]))
        t_best = hi[enter] - lo[enter];
      for (int i = 0; i < m; ++i) {
        double delta = -w[i] * dir;
        if (std::abs(delta) <= piv_tol) continue;
        int bi = basis[i];
        double t_i = kInf;
        int hit = 0;
        if (delta > 0.0) {
          if (std::isfinite(hi[bi])) {
            t_i = std::max(0.0, (hi[bi] - x[bi]) / delta);
            hit = +1;
          }
        } else {
          if (std::isfinite(lo[bi])) {
            t_i = std::max(0.0, (lo[bi] - x[bi]) / delta);
            hit = -1;
          }
        }
        if (t_i < t_best - 1e-12 ||
            (t_i < t_best + 1e-12 && leave_pos >= 0 && bi < basis[leave_pos])) {
          t_best = t_i;
          leave_pos = i;
          leave_hit = hit;
        }
      }
      if (!std::isfinite(t_best)) return false;  // unbounded ray

      // Apply the step.
      x[enter] += dir * t_best;
      for (int i = 0; i < m; ++i) x[basis[i]] -= w[i] * dir * t_best;
      if (leave_pos < 0) {
        state[enter] = (dir > 0) ? +1 : -1;  // bound flip
        x[enter] = (dir > 0) ? hi[enter] : lo[enter];
      } else {
        int out = basis[leave_pos];
        state[out] = leave_hit;
        x[out] = (leave_hit > 0) ? hi[out] : lo[out];
        basis[leave_pos] = enter;
        state[enter] = 0;
      }
      recompute_basic_values();
    }
    throw std::runtime_error("linprog: iteration limit hit");
  }
};

}  // namespace detail

// Maximize c'x subject to A x (rel) b and lo <= x <= hi, where rel[i] is one
// of '<', '=', '>' (meaning <=, ==, >=). Infinite bounds are allowed.
inline LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                         const std::vector<char>& rel, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  using detail::kInf;
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(b.size());
  if (A.rows() != m || A.cols() != n || lo.size() != n || hi.size() != n ||
      static_cast<int>(rel.size()) != m)
    throw std::invalid_argument("linprog: inconsistent dimensions");
  for (int j = 0; j < n; ++j)
    if (lo[j] > hi[j]) return {LpStatus::Infeasible, {}, 0.0};

  detail::BoundedSimplex s;
  s.m = m;
  s.nt = n + m + m;  // structural + slack + artificial
  s.A.setZero(m, s.nt);
  s.A.leftCols(n) = A;
  s.b = b;
  s.lo.setConstant(s.nt, 0.0);
  s.hi.setConstant(s.nt, 0.0);
  s.lo.head(n) = lo;
  s.hi.head(n) = hi;
  for (int i = 0; i < m; ++i) {
    // Slack: A x + s = b with s >= 0 for '<', s <= 0 for '>', s = 0 for '='.
    s.A(i, n + i) = 1.0;
    if (rel[i] == '<') {
      s.lo[n + i] = 0.0;
      s.hi[n + i] = kInf;
    } else if (rel[i] == '>') {
      s.lo[n + i] = -kInf;
      s.hi[n + i] = 0.0;
    } else if (rel[i] == '=') {
      s.lo[n + i] = 0.0;
      s.hi[n + i] = 0.0;
    } else {
      throw std::invalid_argument("linprog: rel must be '<', '=' or '>'");
    }
  }
  s.x.setZero(s.nt);
  s.state.assign(s.nt, -1);
  s.basis.resize(m);
  for (int j = 0; j < n + m; ++j) s.place_nonbasic(j);

  // Artificial columns complete an identity start basis.
  Eigen::VectorXd resid = s.b;
  for (int j = 0; j < n + m; ++j)
    if (s.x[j] != 0.0) resid -= s.A.col(j) * s.x[j];
  for (int i = 0; i < m; ++i) {
    int aj = n + m + i;
    s.A(i, aj) = (resid[i] >= 0.0) ? 1.0 : -1.0;
    s.lo[aj] = 0.0;
    s.hi[aj] = kInf;
    s.x[aj] = std::abs(resid[i]);
    s.basis[i] = aj;
    s.state[aj] = 0;
  }

  // Phase 1: drive the artificials to zero.
  s.c.setZero(s.nt);
  for (int i = 0; i < m; ++i) s.c[n + m + i] = -1.0;
  s.iterate();
  double infeas = 0.0;
  for (int i = 0; i < m; ++i) infeas += s.x[n + m + i];
  double feas_tol = 1e-9 * (1.0 + b.cwiseAbs().sum());
  if (infeas > feas_tol) return {LpStatus::Infeasible, {}, 0.0};

  // Pin artificials at zero for phase 2 (basic ones sit harmlessly at 0).
  for (int i = 0; i < m; ++i) {
    int aj = n + m + i;
    s.lo[aj] = s.hi[aj] = 0.0;
    if (s.state[aj] != 0) s.x[aj] = 0.0;
  }

  // Phase 2: the real objective.
  s.c.setZero(s.nt);
  s.c.head(n) = c;
  if (!s.iterate()) return {LpStatus::Unbounded, {}, 0.0};

  LpResult out;
  out.status = LpStatus::Optimal;
  out.x = s.x.head(n);
  out.objective = c.dot(out.x);
  return out;
}

}  // namespace ftc
