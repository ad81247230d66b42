#pragma once

#include <array>

#include "tpmr/units.hpp"

namespace tpmr {

/// Static ground-state constants of the NV center coupled to its 14N nucleus.
/// Frequencies in MHz, times in microseconds.
struct NvParams {
  double d_gs = 2870.0;  ///< zero-field splitting
  double zeeman = 42.0;  ///< electron Zeeman shift g_e mu_B B0 (1.5 mT)
  double a_hf = 2.2;     ///< hyperfine constant A (signed)
  double q_quad = 4.95;  ///< quadrupole constant Q (signed)
  double t1 = 6000.0;
  double t2 = 1.0;
  double t2_star = 1.0 / (kPi * 0.71);  ///< carrier FWHM 1/(pi t2_star) = 0.71 MHz

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// |ms, mI> product state label, both in {-1, 0, +1}.
struct SpinLabel {
  int ms = 0;
  int mi = 0;

  /// Throws std::invalid_argument when either quantum number is out of range.
  static SpinLabel make(int ms, int mi);
  bool valid() const { return ms >= -1 && ms <= 1 && mi >= -1 && mi <= 1; }
  friend bool operator==(const SpinLabel&, const SpinLabel&) = default;
};

enum class TransitionKind { esr, nmr };

/// E = D ms^2 + gmuB ms + A ms mI + Q mI^2 (MHz).
double energy_level(const NvParams& p, SpinLabel s);

/// Central ms=0 <-> ms=-1 line f0 = D - g mu_B B0.
double center_frequency(const NvParams& p);

/// The hyperfine triplet {f0 - A, f0, f0 + A}, sorted ascending.
std::array<double, 3> esr_frequencies(const NvParams& p);

/// 14N lines {f0-Q-A, f0-Q+A, f1+Q-A, f-1+Q+A} with f+-1 = f0 +- A, in that
/// order. The last two coincide at f0 + Q.
std::array<double, 4> nmr_lines(const NvParams& p);

/// Single-quantum selection rules. Anything that changes both ms and mI, or
/// ms by two, is forbidden.
bool transition_allowed(SpinLabel from, SpinLabel to, TransitionKind kind);

/// Two-photon lines f_I +- f_pump for each carrier, sorted ascending.
std::array<double, 6> tpmr_positions(const NvParams& p, double f_pump);

}  // namespace tpmr
