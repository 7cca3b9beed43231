#pragma once
// Fourth-order Butterworth low-pass, realised as two cascaded biquads from
// the bilinear transform with frequency prewarping. Every channel of a
// dataset is run through an identical copy of the filter, so the relative
// phase between regressors and measurements is untouched -- the property the
// identification pipeline depends on.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>

namespace ftc {

struct Biquad {
  // y[k] = b0 x[k] + b1 x[k-1] + b2 x[k-2] - a1 y[k-1] - a2 y[k-2]
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

class ButterworthLowpass {
 public:
  ButterworthLowpass(double cutoff_hz, double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
      throw std::invalid_argument("butterworth: bad sample rate");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz))
      throw std::invalid_argument(
          "butterworth: cutoff must lie in (0, Nyquist)");
    // Analog prototype: cascade of s^2 + s/Q + 1 with the two Butterworth
    // quality factors; bilinear transform with K = tan(pi fc / fs).
    const double K = std::tan(M_PI * cutoff_hz / sample_rate_hz);
    const double q[2] = {1.0 / (2.0 * std::cos(M_PI / 8.0)),
                         1.0 / (2.0 * std::cos(3.0 * M_PI / 8.0))};
    for (int s = 0; s < 2; ++s) {
      const double norm = 1.0 / (1.0 + K / q[s] + K * K);
      sections_[s].b0 = K * K * norm;
      sections_[s].b1 = 2.0 * sections_[s].b0;
      sections_[s].b2 = sections_[s].b0;
      sections_[s].a1 = 2.0 * (K * K - 1.0) * norm;
      sections_[s].a2 = (1.0 - K / q[s] + K * K) * norm;
    }
    reset();
  }

  void reset() {
    for (auto& st : state_) st = {0.0, 0.0};
  }

  // Sets the internal state as if the input had been x0 forever, removing
  // the start-up transient for signals with a large DC component. Uses the
  // unity-DC identity sum(b) = 1 + sum(a), so output equals x0 immediately.
  void prime(double x0) {
    for (int s = 0; s < 2; ++s) {
      const Biquad& c = sections_[s];
      state_[s][0] = (1.0 - c.b0) * x0;
      state_[s][1] = (c.b2 - c.a2) * x0;
    }
  }

  // Streaming form, transposed direct form II.
  double step(double x) {
    for (int s = 0; s < 2; ++s) {
      const Biquad& c = sections_[s];
      const double y = c.b0 * x + state_[s][0];
      state_[s][0] = c.b1 * x - c.a1 * y + state_[s][1];
      state_[s][1] = c.b2 * x - c.a2 * y;
      x = y;
    }
    return x;
  }

  // Magnitude of the realised digital response at a given frequency;
  // exact evaluation of the cascaded transfer function on the unit circle.
  double magnitude(double freq_hz, double sample_rate_hz) const {
    const std::complex<double> z =
        std::polar(1.0, -2.0 * M_PI * freq_hz / sample_rate_hz);
    std::complex<double> h = 1.0;
    for (const Biquad& c : sections_) {
      h *= (c.b0 + c.b1 * z + c.b2 * z * z) /
           (1.0 + c.a1 * z + c.a2 * z * z);
    }
    return std::abs(h);
  }

  const std::array<Biquad, 2>& sections() const { return sections_; }

 private:
  std::array<Biquad, 2> sections_;
  std::array<std::array<double, 2>, 2> state_;
};

// Filters every column of the signal with an identical filter, each primed
// to the column's first sample so DC offsets produce no start-up swing.
inline Eigen::MatrixXd butterworth_lowpass(const Eigen::MatrixXd& signal,
                                           double cutoff_hz,
                                           double sample_rate_hz) {
  Eigen::MatrixXd out(signal.rows(), signal.cols());
  for (Eigen::Index c = 0; c < signal.cols(); ++c) {
    ButterworthLowpass f(cutoff_hz, sample_rate_hz);
    if (signal.rows() > 0) f.prime(signal(0, c));
    for (Eigen::Index r = 0; r < signal.rows(); ++r)
      out(r, c) = f.step(signal(r, c));
  }
  return out;
}

}  // namespace ftc
