// Reference computations used only by the tests. Each one avoids the code
// path it checks: power series instead of backward recurrence, Cramer's rule
// instead of LU, textbook two-level formulas instead of the propagator.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "tpmr/spin_model.hpp"
#include "tpmr/units.hpp"

namespace oracle {

/// J_n(z) by its power series in long double; reliable for |z| <= 20.
inline double bessel_series(int n, double z) {
  const bool odd_negative = n < 0 && (n % 2 != 0);
  const int m = std::abs(n);
  long double term = 1.0L;
  for (int i = 1; i <= m; ++i) term *= static_cast<long double>(z) / (2.0L * i);
  long double sum = term;
  const long double q = static_cast<long double>(z) * z / 4.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * (k + m));
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum) && k > 10) break;
  }
  return static_cast<double>(odd_negative ? -sum : sum);
}

/// Steady state of d sigma/dt = A sigma + b by Cramer's rule, angular units.
inline std::array<double, 3> bloch_cramer(double offset, double rabi, double t1, double t2) {
  const double om = tpmr::kTwoPi * offset, w1 = tpmr::kTwoPi * rabi;
  const double a[3][3] = {{-1 / t2, -om, 0}, {om, -1 / t2, w1}, {0, -w1, -1 / t1}};
  const double rhs[3] = {0, 0, 1 / t1};  // A sigma = -b
  auto det = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det(a);
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    double m[3][3];
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) m[r][k] = k == c ? rhs[r] : a[r][k];
    out[c] = det(m) / d;
  }
  return out;
}

/// Rabi formula: transfer after time t with Rabi frequency w (MHz, transition)
/// and detuning d (MHz).
inline double rabi_transfer(double w, double d, double t) {
  const double g = std::sqrt(w * w + d * d);
  return g == 0 ? 0.0 : (w * w) / (g * g) * std::pow(std::sin(tpmr::kPi * g * t), 2);
}

/// Random physically sensible parameter sets for property tests.
inline tpmr::NvParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(2000.0, 4000.0), z(0.0, 150.0), a(-5.0, 5.0), q(-6.0, 6.0);
  std::uniform_real_distribution<double> t2(0.2, 5.0), ratio(1.0, 1e4), ts(0.1, 2.0);
  tpmr::NvParams p;
  p.d_gs = d(rng);
  p.zeeman = z(rng);
  p.a_hf = a(rng);
  p.q_quad = q(rng);
  p.t2 = t2(rng);
  p.t1 = p.t2 * ratio(rng);
  p.t2_star = ts(rng);
  return p;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
