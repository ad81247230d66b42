#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tpmr/frames.hpp"

namespace tpmr {

/// Expectation values (<Sx>, <Sy>, <Sz>) of the effective two-level system.
/// Equilibrium is sigma0 = (0, 0, -1); any contrast normalisation is applied
/// downstream, so |sigma| <= |sigma0| = 1.
struct BlochState {
  Eigen::Vector3d sigma = Eigen::Vector3d(0.0, 0.0, -1.0);
};

/// Steady-state absorption <Sy> = -w1 T2 / ((1 + w1^2 T1 T2) + Omega^2 T2^2)
/// with w1 = 2 pi rabi and Omega = 2 pi offset. Lies in [-1/2, 0] for t1 >= t2.
double steady_state_absorption(double offset, double rabi, double t1, double t2);

/// Result of the two independent fixed-point routes for the Bloch equations.
struct BlochSteadyState {
  BlochState linear_solve;  ///< stationarity condition solved as a 3x3 system
  BlochState integrated;    ///< exact propagator applied over doubling horizons
  int doublings = 0;
  double horizon = 0.0;     ///< final integration time (us)
};

/// Both routes must agree to 1e-9 (relative to |sigma0|); otherwise, or when
/// the integration does not settle, throws NumericError with diagnostics.
BlochSteadyState bloch_steady_state_oracle(double offset, double rabi, double t1, double t2);

/// Bessel weight of one order in the multiphoton sum.
struct OrderWeight {
  int k = 0;
  double bessel = 0.0;  ///< J_k(2 w2 / w_rf)
};

/// sum_k w1 T2 J_k^2 / (1 + w1^2 J_k^2 T1 T2 + (Omega - k w_rf)^2 T2^2) for the
/// given weights; the building block of multiphoton_absorption.
double lorentzian_sum(double offset, double rabi, double rf_freq, double t1, double t2,
                      std::span<const OrderWeight> weights);

/// One term of the multiphoton sum (order k), positive absorption magnitude.
double multiphoton_term(int k, double offset, const DriveTone& probe, const DriveTone& pump, double t1,
                        double t2);

/// Absorption summed over k in [-k_max, k_max]; reduces to
/// |steady_state_absorption| when the pump amplitude is zero.
double multiphoton_absorption(double offset, const DriveTone& probe, const DriveTone& pump, double t1,
                              double t2, int k_max = 1);

inline constexpr double kTheoryValidityRf = 2.5;  ///< MHz; below this the model is unreliable

struct CurvePoint {
  double omega_rf = 0.0;   ///< MHz
  double intensity = 0.0;  ///< multiphoton absorption at the k = 1 centre
  bool valid = true;       ///< false below kTheoryValidityRf
};

/// Two-photon intensity vs. rf frequency at fixed pump amplitude: each point
/// is multiphoton_absorption evaluated on its own k = 1 resonance. Points below
/// 2.5 MHz are kept, flagged invalid and reported through log::warn.
std::vector<CurvePoint> tpmr_intensity_curve(const DriveTone& probe, double pump_rabi,
                                             std::span<const double> rf_grid, double t1, double t2,
                                             int k_max = 1);

}  // namespace tpmr
