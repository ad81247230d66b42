#pragma once

#include "tpmr/units.hpp"

namespace tpmr {

enum class Axis { x, z };
enum class ToneRole { probe, pump };

/// One oscillating field 2*rabi*cos(2 pi freq t) along `axis`. rabi and freq
/// are in MHz. The probe couples on x, the pump on z (rf parallel to B0).
struct DriveTone {
  double rabi = 0.0;
  double freq = 1.0;
  Axis axis = Axis::x;
  ToneRole role = ToneRole::probe;

  static DriveTone probe(double rabi, double freq) { return {rabi, freq, Axis::x, ToneRole::probe}; }
  static DriveTone pump(double rabi, double freq) { return {rabi, freq, Axis::z, ToneRole::pump}; }

  /// Throws std::invalid_argument on negative amplitude, non-positive
  /// frequency or an axis that does not match the role.
  void validate() const;
};

/// Static two-level Hamiltonian offset*Sz + rabi_eff*Sx of the k-th order
/// resonance in the toggling frame (MHz).
struct EffectiveTwoLevel {
  double offset = 0.0;
  double rabi_eff = 0.0;
  int order = 0;
};

inline constexpr int kDefaultMaxOrder = 3;
inline constexpr double kBesselMaxArgument = 50.0;
inline constexpr double kSmallArgumentLimit = 0.2;

/// Bessel function of the first kind J_n(z) for integer n and |z| <= 50,
/// absolute error below 1e-12. Throws std::domain_error outside that range.
double bessel_j(int n, double z);

/// Phase-modulation index 2 omega_2 / omega_rf of the pump (dimensionless).
double modulation_index(const DriveTone& pump);

/// Toggling-frame parameters of the order-k resonance. omega0 is the bare
/// transition frequency in MHz; offset = (omega0 - probe.freq) - k*pump.freq
/// and rabi_eff = probe.rabi * J_{-k}(2 omega_2 / omega_rf).
EffectiveTwoLevel effective_order_params(const DriveTone& probe, const DriveTone& pump,
                                         double omega0, int k, int k_max = kDefaultMaxOrder);

/// Leading-order (small modulation index) form of rabi_eff:
/// rabi * sign(-k)^k / |k|! * (omega_2 / omega_rf)^|k|. Warns when the
/// modulation index exceeds kSmallArgumentLimit.
double small_arg_rabi(const DriveTone& probe, const DriveTone& pump, int k);

/// Transverse amplitude in the doubly rotating frame before the near-resonance
/// approximation: -omega_1 omega_2 / sqrt(omega_1^2 + Omega_s^2) (MHz).
double doubly_rotating_rabi(const DriveTone& probe, const DriveTone& pump, double omega0);

/// Rotation angle k*w_rf*t + (2 w_2 / w_rf) sin(w_rf t) of the operator that
/// maps the doubly rotating frame onto the toggling frame. t in us.
double toggling_rotation_phase(double t, int k, const DriveTone& pump);

}  // namespace tpmr
