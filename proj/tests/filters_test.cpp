#include "ftckit/filters.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

namespace {

// Steady-state amplitude of a filtered sine, by quadrature projection over
// whole periods of the tail. Independent of the coefficient formulas.
double measured_gain(double freq_hz, double fs, double cutoff_hz) {
  ftc::ButterworthLowpass f(cutoff_hz, fs);
  const int settle = static_cast<int>(2.0 * fs);  // 2 s transient discard
  const int periods = 50;
  const int n = static_cast<int>(periods * fs / freq_hz);
  double ci = 0.0, cq = 0.0;
  int count = 0;
  for (int k = 0; k < settle + n; ++k) {
    const double t = k / fs;
    const double y = f.step(std::sin(2.0 * M_PI * freq_hz * t));
    if (k >= settle) {
      ci += y * std::sin(2.0 * M_PI * freq_hz * t);
      cq += y * std::cos(2.0 * M_PI * freq_hz * t);
      ++count;
    }
  }
  return 2.0 * std::hypot(ci, cq) / count;
}

TEST(Butterworth, UnityDcGain) {
  ftc::ButterworthLowpass f(25.0, 500.0);
  double y = 0.0;
  for (int k = 0; k < 2000; ++k) y = f.step(1.0);
  EXPECT_NEAR(y, 1.0, 1e-9);
  // Exact in the coefficients: sum(b) == 1 + sum(a) per section.
  for (const auto& s : f.sections()) {
    EXPECT_NEAR(s.b0 + s.b1 + s.b2, 1.0 + s.a1 + s.a2, 1e-15);
  }
}

TEST(Butterworth, CutoffSitsAtMinusThreeDecibels) {
  const double gain = measured_gain(25.0, 500.0, 25.0);
  const double db = 20.0 * std::log10(gain);
  EXPECT_NEAR(db, -3.0, 0.1);
  // And the exact transfer-function evaluation agrees with the time-domain
  // measurement.
  ftc::ButterworthLowpass f(25.0, 500.0);
  EXPECT_NEAR(f.magnitude(25.0, 500.0), gain, 1e-6);
  EXPECT_NEAR(f.magnitude(25.0, 500.0), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Butterworth, TwoOctavesUpAttenuatesAtLeast48Decibels) {
  const double gain = measured_gain(100.0, 500.0, 25.0);
  EXPECT_LE(20.0 * std::log10(gain), -48.0);
}

TEST(Butterworth, MonotoneRolloff) {
  ftc::ButterworthLowpass f(25.0, 500.0);
  double prev = f.magnitude(1.0, 500.0);
  for (double freq = 2.0; freq < 249.0; freq += 1.0) {
    const double m = f.magnitude(freq, 500.0);
    EXPECT_LT(m, prev + 1e-12);
    prev = m;
  }
}

TEST(Butterworth, RejectsBadParameters) {
  EXPECT_THROW(ftc::ButterworthLowpass(250.0, 500.0), std::invalid_argument);
  EXPECT_THROW(ftc::ButterworthLowpass(300.0, 500.0), std::invalid_argument);
  EXPECT_THROW(ftc::ButterworthLowpass(0.0, 500.0), std::invalid_argument);
  EXPECT_THROW(ftc::ButterworthLowpass(25.0, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(ftc::ButterworthLowpass(25.0, 500.0));
}

TEST(Butterworth, ChannelsFilteredIdentically) {
  // A scaled copy of a channel must come out scaled exactly: phase and
  // shape are channel-independent.
  Eigen::MatrixXd sig(400, 2);
  for (int k = 0; k < 400; ++k) {
    sig(k, 0) = std::sin(0.3 * k) + 0.2 * std::sin(2.1 * k);
    sig(k, 1) = -3.5 * sig(k, 0);
  }
  const Eigen::MatrixXd out = ftc::butterworth_lowpass(sig, 25.0, 500.0);
  EXPECT_LT((out.col(1) + 3.5 * out.col(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Butterworth, StreamingMatchesBatch) {
  Eigen::MatrixXd sig(257, 1);
  for (int k = 0; k < 257; ++k) sig(k, 0) = std::cos(0.7 * k) * (k % 7);
  const Eigen::MatrixXd batch = ftc::butterworth_lowpass(sig, 20.0, 230.0);
  ftc::ButterworthLowpass f(20.0, 230.0);
  f.prime(sig(0, 0));  // batch primes each column the same way
  for (int k = 0; k < 257; ++k) {
    EXPECT_EQ(f.step(sig(k, 0)), batch(k, 0));
  }
}

}  // namespace
