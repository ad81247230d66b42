#pragma once

#include <numbers>

// Frequencies cross module boundaries in MHz and times in microseconds, so
// MHz * us is dimensionless. Angular quantities (rad/us) appear only inside
// the frames, bloch and dynamics implementations.
namespace tpmr {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// MHz -> rad/us
constexpr double angular(double mhz) { return kTwoPi * mhz; }

/// Gaussian FWHM = kFwhmPerSigma * sigma.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

}  // namespace tpmr
