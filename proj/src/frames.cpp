#include "tpmr/frames.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tpmr/log.hpp"

namespace tpmr {

void DriveTone::validate() const {
  const char* name = role == ToneRole::probe ? "probe" : "pump";
  if (!(std::isfinite(rabi) && rabi >= 0))
    throw std::invalid_argument(std::string(name) + ".rabi: must be >= 0");
  if (!(std::isfinite(freq) && freq > 0))
    throw std::invalid_argument(std::string(name) + ".freq: must be > 0");
  const Axis expected = role == ToneRole::probe ? Axis::x : Axis::z;
  if (axis != expected)
    throw std::invalid_argument(std::string(name) + ": probe couples on x, pump on z");
}

namespace {

// J_n(x) for n >= 0, x > 0 by Miller's backward recurrence, normalised with
// J_0 + 2 sum_k J_2k = 1. Starting well above max(n, x) makes the recurrence
// dominated by the minimal solution long before it reaches the orders we keep.
double bessel_miller(int n, double x) {
  const int top = 2 * ((std::max(n, static_cast<int>(x)) + 40 + static_cast<int>(std::sqrt(60.0 * (x + n)))) / 2);
  double next = 0.0;  // J_{m+1}
  double cur = 1e-300;  // J_m
  double norm = 0.0;
  double wanted = 0.0;
  for (int m = top; m > 0; --m) {
    const double prev = 2.0 * m / x * cur - next;  // J_{m-1}
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      wanted *= 1e-250;
    }
    if (m - 1 == n) wanted = cur;
    if ((m - 1) % 2 == 0 && m - 1 > 0) norm += 2.0 * cur;
  }
  norm += cur;  // J_0
  return wanted / norm;
}

}  // namespace

double bessel_j(int n, double z) {
  if (!std::isfinite(z) || std::abs(z) > kBesselMaxArgument)
    throw std::domain_error(fmt::format("bessel_j: |z| = {} exceeds {}", std::abs(z), kBesselMaxArgument));
  const int m = std::abs(n);
  double sign = (n < 0 && (m % 2 == 1)) ? -1.0 : 1.0;
  if (z < 0 && (m % 2 == 1)) sign = -sign;
  const double x = std::abs(z);
  if (x == 0.0) return m == 0 ? 1.0 : 0.0;
  return sign * bessel_miller(m, x);
}

double modulation_index(const DriveTone& pump) { return 2.0 * pump.rabi / pump.freq; }

EffectiveTwoLevel effective_order_params(const DriveTone& probe, const DriveTone& pump, double omega0,
                                         int k, int k_max) {
  if (!(pump.freq > 0)) throw std::invalid_argument("pump.freq must be > 0");
  if (std::abs(k) > k_max)
    throw std::out_of_range(fmt::format("order {} exceeds k_max = {}", k, k_max));
  const double offset_s = omega0 - probe.freq;
  return {offset_s - k * pump.freq, probe.rabi * bessel_j(-k, modulation_index(pump)), k};
}

double small_arg_rabi(const DriveTone& probe, const DriveTone& pump, int k) {
  const double z = modulation_index(pump);
  if (z > kSmallArgumentLimit)
    log::warn(fmt::format("small_arg_rabi: modulation index {:.4g} exceeds {}; use the exact Bessel form", z,
                          kSmallArgumentLimit));
  if (k == 0) return probe.rabi;
  const int m = std::abs(k);
  const double sign = (k > 0 && m % 2 == 1) ? -1.0 : 1.0;  // sign(-k)^k
  const double ratio = pump.rabi / pump.freq;
  return probe.rabi * sign * std::pow(ratio, m) / std::tgamma(m + 1.0);
}

double doubly_rotating_rabi(const DriveTone& probe, const DriveTone& pump, double omega0) {
  const double offset_s = omega0 - probe.freq;
  return -probe.rabi * pump.rabi / std::hypot(probe.rabi, offset_s);
}

double toggling_rotation_phase(double t, int k, const DriveTone& pump) {
  if (!(pump.freq > 0)) throw std::invalid_argument("pump.freq must be > 0");
  const double w = angular(pump.freq);
  return k * w * t + modulation_index(pump) * std::sin(w * t);
}

}  // namespace tpmr
