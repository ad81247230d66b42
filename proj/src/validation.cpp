#include "tpmr/validation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "tpmr/errors.hpp"

namespace tpmr {

namespace {

double sse(const std::vector<double>& t, const std::vector<double>& p0, double a, double f) {
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = 1.0 - a * std::pow(std::sin(kPi * f * t[i]), 2) - p0[i];
    s += r * r;
  }
  return s;
}

// Amplitude minimising the residual at fixed frequency (linear in a).
double best_amplitude(const std::vector<double>& t, const std::vector<double>& p0, double f) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double g = std::pow(std::sin(kPi * f * t[i]), 2);
    num += g * (1.0 - p0[i]);
    den += g * g;
  }
  return den > 0 ? num / den : 0.0;
}

}  // namespace

std::pair<double, double> fit_rabi_oscillation(const std::vector<double>& t, const std::vector<double>& p0,
                                               double guess) {
  if (t.size() != p0.size() || t.size() < 4) throw std::invalid_argument("fit_rabi_oscillation: need >= 4 samples");
  if (!(guess > 0)) throw std::invalid_argument("fit_rabi_oscillation: guess must be > 0");
  double best_f = guess;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 400; ++i) {
    const double f = guess * (0.5 + i / 400.0);
    const double s = sse(t, p0, best_amplitude(t, p0, f), f);
    if (s < best) {
      best = s;
      best_f = f;
    }
  }
  // Golden-section refinement on the profiled residual.
  double lo = best_f - guess / 400.0, hi = best_f + guess / 400.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    if (sse(t, p0, best_amplitude(t, p0, a), a) < sse(t, p0, best_amplitude(t, p0, b), b)) hi = b;
    else lo = a;
  }
  const double f = 0.5 * (lo + hi);
  return {best_amplitude(t, p0, f), f};
}

SidebandCheck sideband_check(const NvParams& p, double z, const SidebandCheckOptions& opt) {
  if (!(z > 0)) throw std::invalid_argument("sideband_check: z must be > 0");
  if (!(opt.transition_rabi > 0) || !(opt.rf_freq > 0) || !(opt.scan_step > 0))
    throw std::invalid_argument("sideband_check: rabi, rf and scan step must be > 0");
  SidebandCheck out;
  out.z = z;
  out.scan_step = opt.scan_step;
  out.theory_rabi = opt.transition_rabi * bessel_j(1, z);
  out.theory_center = -opt.rf_freq;

  const double f0 = center_frequency(p);
  const DriveTone pump = DriveTone::pump(0.5 * z * opt.rf_freq, opt.rf_freq);
  const double tone = opt.transition_rabi / std::sqrt(2.0);
  const DensityState rho0 = DensityState::pure({0, 0});
  PropagationOptions po;

  // Transfer after a theory pi pulse, scanned around the prediction.
  const double pi_time = 0.5 / out.theory_rabi;
  double best = -1.0;
  for (int i = -opt.scan_half_width; i <= opt.scan_half_width; ++i) {
    const double det = out.theory_center + i * opt.scan_step;
    const DriveTone probe = DriveTone::probe(tone, f0 + det);
    const std::vector<double> at{pi_time};
    const double loss = 1.0 - ms0_population_trace(rho0, p, probe, pump, at, opt.dt, po)[0];
    if (loss > best) {
      best = loss;
      out.oracle_center = det;
    }
  }

  // The carrier light shift moves the resonance by a fraction of a scan
  // step; locate it before measuring the oscillation frequency.
  const auto transfer = [&](double det) {
    const std::vector<double> at{pi_time};
    return 1.0 - ms0_population_trace(rho0, p, DriveTone::probe(tone, f0 + det), pump, at, opt.dt, po)[0];
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = out.oracle_center - opt.scan_step, hi = out.oracle_center + opt.scan_step;
  for (int it = 0; it < 24; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    if (transfer(a) > transfer(b)) hi = b;
    else lo = a;
  }
  out.resonance = 0.5 * (lo + hi);

  const DriveTone probe = DriveTone::probe(tone, f0 + out.resonance);
  std::vector<double> times(static_cast<std::size_t>(opt.samples));
  const double span = opt.periods / out.theory_rabi;
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = span * (i + 1) / static_cast<double>(times.size());
  const auto trace = ms0_population_trace(rho0, p, probe, pump, times, opt.dt, po);
  const auto [a, f] = fit_rabi_oscillation(times, trace, out.theory_rabi);
  if (!(a > 0.5)) throw NumericError("sideband_check: no coherent oscillation found");
  out.amplitude = a;
  out.oracle_rabi = f;
  out.rabi_error = std::abs(f - out.theory_rabi) / out.theory_rabi;
  return out;
}

}  // namespace tpmr
