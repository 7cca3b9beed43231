#include "ftckit/linprog.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace {

using ftc::LpStatus;
using ftc::solve_lp;
const double kInf = std::numeric_limits<double>::infinity();

TEST(Linprog, BoxOnly) {
  // No rows: the optimum is coordinatewise at the bound matching sign(c).
  Eigen::VectorXd c(3);
  c << 2.0, -1.0, 0.5;
  Eigen::MatrixXd A(0, 3);
  Eigen::VectorXd b(0);
  Eigen::VectorXd lo(3), hi(3);
  lo << -1, -2, 0;
  hi << 3, 5, 2;
  auto r = solve_lp(c, A, {}, b, lo, hi);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x[0], 3.0, 1e-12);
  EXPECT_NEAR(r.x[1], -2.0, 1e-12);
  EXPECT_NEAR(r.x[2], 2.0, 1e-12);
  EXPECT_NEAR(r.objective, 9.0, 1e-12);
}

TEST(Linprog, SimpleTwoVar) {
  // max x + y st x + 2y <= 4, 3x + y <= 6, x,y >= 0 → (8/5, 6/5), obj 14/5.
  Eigen::VectorXd c(2);
  c << 1, 1;
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 3, 1;
  Eigen::VectorXd b(2);
  b << 4, 6;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, kInf);
  auto r = solve_lp(c, A, {'<', '<'}, b, lo, hi);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 14.0 / 5.0, 1e-9);
  EXPECT_NEAR(r.x[0], 8.0 / 5.0, 1e-9);
  EXPECT_NEAR(r.x[1], 6.0 / 5.0, 1e-9);
}

TEST(Linprog, MixedRelations) {
  // max -x + y st x + y = 2, x >= 0.5, y <= 1.4  → x=0.6, y=1.4.
  Eigen::VectorXd c(2);
  c << -1, 1;
  Eigen::MatrixXd A(3, 2);
  A << 1, 1, 1, 0, 0, 1;
  Eigen::VectorXd b(3);
  b << 2, 0.5, 1.4;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -kInf);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, kInf);
  auto r = solve_lp(c, A, {'=', '>', '<'}, b, lo, hi);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x[0], 0.6, 1e-9);
  EXPECT_NEAR(r.x[1], 1.4, 1e-9);
}

TEST(Linprog, Infeasible) {
  Eigen::VectorXd c(2);
  c << 1, 0;
  Eigen::MatrixXd A(1, 2);
  A << 1, 1;
  Eigen::VectorXd b(1);
  b << 5;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(2);
  auto r = solve_lp(c, A, {'='}, b, lo, hi);
  EXPECT_EQ(r.status, LpStatus::Infeasible);
}

TEST(Linprog, Unbounded) {
  Eigen::VectorXd c(1);
  c << 1;
  Eigen::MatrixXd A(1, 1);
  A << 1;
  Eigen::VectorXd b(1);
  b << 1;
  Eigen::VectorXd lo(1), hi(1);
  lo << 0;
  hi << kInf;
  auto r = solve_lp(c, A, {'>'}, b, lo, hi);
  EXPECT_EQ(r.status, LpStatus::Unbounded);
}

TEST(Linprog, BadBounds) {
  Eigen::VectorXd c(1);
  c << 1;
  Eigen::MatrixXd A(0, 1);
  Eigen::VectorXd b(0);
  Eigen::VectorXd lo(1), hi(1);
  lo << 2;
  hi << 1;
  EXPECT_EQ(solve_lp(c, A, {}, b, lo, hi).status, LpStatus::Infeasible);
}

TEST(Linprog, DegenerateDuplicateRows) {
  Eigen::VectorXd c(2);
  c << 1, 1;
  Eigen::MatrixXd A(3, 2);
  A << 1, 1, 1, 1, 1, 0;
  Eigen::VectorXd b(3);
  b << 2, 2, 1.5;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, kInf);
  auto r = solve_lp(c, A, {'<', '<', '<'}, b, lo, hi);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 2.0, 1e-9);
}

// Continuous knapsack against a greedy oracle: max c'x st sum x = B, box.
TEST(Linprog, KnapsackRandom) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(U(rng) * 7);
    Eigen::VectorXd c(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      c[i] = 2.0 * U(rng) - 1.0;
      lo[i] = U(rng);
      hi[i] = lo[i] + U(rng) + 1e-3;
    }
    double B = lo.sum() + U(rng) * (hi.sum() - lo.sum());
    Eigen::MatrixXd A(1, n);
    A.setOnes();
    Eigen::VectorXd b(1);
    b << B;
    auto r = solve_lp(c, A, {'='}, b, lo, hi);
    ASSERT_EQ(r.status, LpStatus::Optimal) << "trial " << trial;
    // Greedy: start at lo, raise coordinates in decreasing c order.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a2, int b2) { return c[a2] > c[b2]; });
    Eigen::VectorXd x = lo;
    double rem = B - lo.sum();
    for (int idx : order) {
      double add = std::min(rem, hi[idx] - lo[idx]);
      x[idx] += add;
      rem -= add;
      if (rem <= 0) break;
    }
    EXPECT_NEAR(r.objective, c.dot(x), 1e-9) << "trial " << trial;
    EXPECT_NEAR(A.row(0).dot(r.x), B, 1e-9);
    for (int i = 0; i < n; ++i) {
      EXPECT_GE(r.x[i], lo[i] - 1e-9);
      EXPECT_LE(r.x[i], hi[i] + 1e-9);
    }
  }
}

// Random inequality LPs cross-checked by brute-force vertex enumeration.
TEST(Linprog, RandomVsVertexEnumeration) {
  std::mt19937_64 rng(999);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2, m = 4;
    Eigen::VectorXd c(n);
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < n; ++i) c[i] = N(rng);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = N(rng);
      b[i] = 0.5 + U(rng);  // origin strictly feasible
    }
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -2.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 2.0);
    auto r = solve_lp(c, A, std::vector<char>(m, '<'), b, lo, hi);
    ASSERT_EQ(r.status, LpStatus::Optimal);

    // All constraint lines (rows + box faces) pairwise intersected.
    std::vector<Eigen::Vector3d> lines;  // a0 x + a1 y <= a2
    for (int i = 0; i < m; ++i) lines.push_back({A(i, 0), A(i, 1), b[i]});
    lines.push_back({1, 0, hi[0]});
    lines.push_back({-1, 0, -lo[0]});
    lines.push_back({0, 1, hi[1]});
    lines.push_back({0, -1, -lo[1]});
    double best = -kInf;
    for (size_t i = 0; i < lines.size(); ++i)
      for (size_t j = i + 1; j < lines.size(); ++j) {
        double det = lines[i][0] * lines[j][1] - lines[i][1] * lines[j][0];
        if (std::abs(det) < 1e-12) continue;
        double x = (lines[i][2] * lines[j][1] - lines[i][1] * lines[j][2]) / det;
        double y = (lines[i][0] * lines[j][2] - lines[i][2] * lines[j][0]) / det;
        bool ok = true;
        for (const auto& L : lines)
          if (L[0] * x + L[1] * y > L[2] + 1e-9) {
            ok = false;
            break;
          }
        if (ok) best = std::max(best, c[0] * x + c[1] * y);
      }
    ASSERT_TRUE(std::isfinite(best));
    EXPECT_NEAR(r.objective, best, 1e-7) << "trial " << trial;
  }
}

TEST(Linprog, Deterministic) {
  Eigen::VectorXd c(3);
  c << 1, 2, 3;
  Eigen::MatrixXd A(2, 3);
  A << 1, 1, 1, 1, -1, 0;
  Eigen::VectorXd b(2);
  b << 1, 0.2;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(3);
  auto r1 = solve_lp(c, A, {'=', '<'}, b, lo, hi);
  auto r2 = solve_lp(c, A, {'=', '<'}, b, lo, hi);
  ASSERT_EQ(r1.status, LpStatus::Optimal);
  EXPECT_EQ(r1.x, r2.x);
  EXPECT_EQ(r1.objective, r2.objective);
}

}  // namespace
