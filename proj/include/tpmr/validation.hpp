#pragma once

#include <vector>

#include "tpmr/dynamics.hpp"

namespace tpmr {

/// Oracle-versus-effective-theory comparison for the k = 1 sideband of one
/// nuclear manifold (mI = 0, carrier at f0).
struct SidebandCheck {
  double z = 0.0;              ///< modulation index 2 w2 / w_rf
  double theory_rabi = 0.0;    ///< transition Rabi * J1(z), MHz
  double oracle_rabi = 0.0;    ///< fitted from the ms = 0 population trace
  double rabi_error = 0.0;     ///< relative
  double theory_center = 0.0;  ///< probe detuning from f0, MHz (= -f_rf)
  double oracle_center = 0.0;  ///< best grid point of the transfer scan
  double scan_step = 0.0;
  double resonance = 0.0;      ///< refined maximum of the transfer, MHz
  double amplitude = 0.0;      ///< fitted oscillation amplitude
};

struct SidebandCheckOptions {
  double transition_rabi = 0.2;  ///< MHz, on the 0 <-> -1 transition
  double rf_freq = 5.3;          ///< MHz
  double scan_step = 0.01;       ///< MHz
  int scan_half_width = 5;       ///< grid points either side of the prediction
  double periods = 2.0;          ///< trace length in theory periods
  int samples = 240;
  double dt = 0.0;
};

SidebandCheck sideband_check(const NvParams& p, double z, const SidebandCheckOptions& opt = {});

/// Least-squares fit of P(t) = 1 - a sin^2(pi f t); returns {a, f}. The
/// starting frequency seeds a coarse search over [0.5, 1.5] * guess.
std::pair<double, double> fit_rabi_oscillation(const std::vector<double>& t, const std::vector<double>& p0,
                                               double guess);

}  // namespace tpmr
