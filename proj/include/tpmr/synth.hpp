#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpmr/frames.hpp"
#include "tpmr/spectrum.hpp"
#include "tpmr/spin_model.hpp"

namespace tpmr {

/// Phenomenological knobs of the fast generator.
struct SynthSettings {
  double contrast_scale = 0.017;  ///< depth of the pump-off carrier dip (dPL/PL)
  double width_ratio = 0.45;      ///< sideband FWHM / carrier FWHM
  /// Laser + probe time per shot (us). Optical re-initialisation every shot
  /// bounds the effective longitudinal time used for the line depths.
  double cycle_time = 6.5;
};

/// One Gaussian dip of the synthetic spectrum, centre relative to f0 (MHz).
struct SpectralLine {
  double center = 0.0;
  double fwhm = 0.0;
  double depth = 0.0;
  int order = 0;  ///< photon order k (0 = carrier)
  int mi = 0;     ///< nuclear manifold
};

/// ESR carriers and the k = +-1 two-photon lines. Each line's depth is its
/// multiphoton absorption term evaluated on resonance (t1 capped at
/// cycle_time), normalised to the pump-off carrier. Zero-depth lines are
/// omitted.
std::vector<SpectralLine> spectral_lines(const NvParams& p, const DriveTone& pump, double probe_rabi,
                                         const SynthSettings& settings = {});

/// Sideband-to-carrier depth ratio for the given pump.
double sideband_visibility(const NvParams& p, const DriveTone& pump, double probe_rabi,
                           const SynthSettings& settings = {});

/// Depth ratio at which sidebands count as visible.
inline constexpr double kVisibilityThreshold = 0.1;

/// Pump Rabi amplitude from power: kappa * sqrt(power_mw).
double power_to_rabi(double power_mw, double kappa);

inline constexpr double kDefaultKappa = 0.19;  ///< MHz / sqrt(mW)

struct SynthInputs {
  NvParams nv;
  DriveTone pump = DriveTone::pump(0.0, 5.3);
  double probe_rabi = 0.09;
  std::vector<double> grid;  ///< detuning from f0, MHz
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  SynthSettings settings;
};

Spectrum synth_spectrum(const SynthInputs& in);

Spectrum synth_spectrum(const NvParams& p, const DriveTone& pump, double probe_rabi, std::span<const double> grid,
                        double noise_sigma, std::uint64_t seed, const SynthSettings& settings = {});

enum class SweepAxis { pump_power, pump_freq };

/// Parameters held fixed during a sweep.
struct SweepFixed {
  double pump_power_mw = 63.0;
  double pump_freq = 5.3;
  double kappa = kDefaultKappa;
  double probe_rabi = 0.09;
  double noise_sigma = 0.0;
  SynthSettings settings;
};

/// Per-value seed used by sweep().
std::uint64_t sweep_seed(std::uint64_t seed, std::size_t index);

/// One spectrum per value (mW or MHz depending on axis) on a shared grid.
std::vector<Spectrum> sweep(const NvParams& p, SweepAxis axis, std::span<const double> values,
                            const SweepFixed& fixed, std::span<const double> grid, std::uint64_t seed,
                            unsigned jobs = 1);

/// Intermodulation tone f_probe + n f_pump leaving the frequency combiner.
struct SpurLine {
  int n = 0;
  double freq = 0.0;          ///< MHz
  double amplitude_db = 0.0;  ///< relative to the n = 0 line, <= 0
};

/// Measured amplitudes at one pump power; db_by_order[i] is the level of
/// |n| = i + 1.
struct SpurRow {
  double power_mw = 0.0;
  std::vector<double> db_by_order;
};

struct SpurModel {
  std::vector<SpurRow> rows;   ///< ascending power
  double onset_mw = 5.0;       ///< below this only the carrier leaves the combiner
  double pump_power_mw = 63.0;

  /// Characterisation at 63 mW: -48 dB at |n| = 1, -15 dB at |n| = 2.
  static SpurModel measured(double pump_power_mw = 63.0);
};

/// Lines at f_probe + n f_pump for |n| <= max_order. Amplitudes are
/// interpolated linearly in log(power) between rows and clamped at the
/// ends; orders missing from the table are dropped.
std::vector<SpurLine> spur_lines(double f_probe, double f_pump, int max_order, const SpurModel& model);

/// Base synthetic spectrum plus the dips each spur produces when it acts as
/// an extra probe of relative amplitude 10^(dB/20): for every carrier a dip
/// at carrier - n f_pump, depth carrier_depth * sin^2(pi/2 * amplitude).
Spectrum apply_spurs(const SynthInputs& base, std::span<const SpurLine> spurs);

/// Relative depth sin^2(pi/2 * 10^(dB/20)) of a spur-induced dip.
double spur_depth_ratio(double amplitude_db);

}  // namespace tpmr
