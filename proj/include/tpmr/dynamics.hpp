#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tpmr/frames.hpp"
#include "tpmr/spectrum.hpp"
#include "tpmr/spin_model.hpp"

namespace tpmr {

using Complex = std::complex<double>;
using Matrix9cd = Eigen::Matrix<Complex, 9, 9>;

/// Electron (x) 14N density matrix. Basis order is lexicographic over
/// ms in {+1, 0, -1} then mI in {+1, 0, -1}.
struct DensityState {
  Matrix9cd rho = Matrix9cd::Zero();

  static int index(SpinLabel s) { return (1 - s.ms) * 3 + (1 - s.mi); }
  static DensityState pure(SpinLabel s);

  double population(SpinLabel s) const { return rho(index(s), index(s)).real(); }
  /// Total population of one electron level summed over the nuclear states.
  double electron_population(int ms) const;
  double trace() const { return rho.trace().real(); }
  double purity() const { return (rho * rho).trace().real(); }
  /// Hermitian within tol, unit trace within tol, no eigenvalue below -1e-9.
  bool is_physical(double tol = 1e-10) const;
};

/// Laser-initialised ms = 0 with an unpolarised nucleus: |0><0| (x) I/3.
DensityState initial_state();

/// Spin-1 operators on the electron factor, embedded in the 9-dim space.
Matrix9cd electron_sx();
Matrix9cd electron_sz();

/// Lab-frame Hamiltonian in rad/us:
/// 2pi [D Sz^2 + gmuB Sz + A Sz Iz + Q Iz^2]
///   + 2 (2pi w1) cos(2pi f_mw t) Sx + 2 (2pi w2) cos(2pi f_rf t + phase) Sz.
Matrix9cd lab_hamiltonian(const NvParams& p, const DriveTone& probe, const DriveTone& pump, double t,
                          double pump_phase = 0.0);

enum class Frame {
  rotating,  ///< frame rotating at the probe frequency, rotating-wave probe
  lab,       ///< full lab-frame Hamiltonian, for slow validation runs
};

struct PropagationOptions {
  Frame frame = Frame::rotating;
  double pump_phase = 0.0;      ///< pump phase (rad) at t = 0
  double detuning = 0.0;        ///< quasi-static field shift along Sz (MHz)
  bool estimate_error = false;  ///< step-doubling estimate (roughly doubles the cost)
};

/// Rotating-frame counterpart of lab_hamiltonian (probe counter-rotating term
/// dropped, pump and everything else kept).
Matrix9cd frame_hamiltonian(const NvParams& p, const DriveTone& probe, const DriveTone& pump, double t,
                            const PropagationOptions& opt = {});

/// Largest admissible step 1/(50 f_max), f_max the fastest frequency that
/// survives in the chosen frame.
double max_time_step(const NvParams& p, const DriveTone& probe, const DriveTone& pump,
                     const PropagationOptions& opt = {});

struct Propagation {
  DensityState state;
  std::size_t steps = 0;
  double error_estimate = 0.0;  ///< max |rho_h - rho_2h| / 15, when requested
};

/// Unitary evolution for `duration` us. dt <= 0 selects max_time_step; a
/// larger dt is rejected with std::invalid_argument. The diagonal part is
/// integrated exactly (interaction picture) and the couplings with fixed-step
/// RK4; the returned state is expressed in the propagation frame.
Propagation propagate(const DensityState& rho0, const NvParams& p, const DriveTone& probe, const DriveTone& pump,
                      double duration, double dt, const PropagationOptions& opt = {});

/// ms = 0 population after `duration`, sampled at each of `times` (ascending,
/// starting anywhere >= 0). Cheaper than repeated propagate calls.
std::vector<double> ms0_population_trace(const DensityState& rho0, const NvParams& p, const DriveTone& probe,
                                         const DriveTone& pump, std::span<const double> times, double dt,
                                         const PropagationOptions& opt = {});

/// Probe pulse applied under a continuous pump (laser initialisation ideal).
struct PulseSequence {
  double probe_duration = 5.5;  ///< us
  double laser_duration = 1.0;  ///< us, readout/initialisation pulse
  DriveTone probe_tone = DriveTone::probe(0.0, 2828.0);
  DriveTone pump_tone = DriveTone::pump(0.0, 5.3);
  bool laser_init = true;

  void validate() const;
};

/// Tone amplitude that makes `duration` a resonant pi pulse on a
/// ms = 0 <-> ms = -1 transition: the spin-1 matrix element gives the
/// transition a Rabi frequency of sqrt(2) * rabi.
double pi_pulse_rabi(double duration);

struct OdmrOptions {
  Frame frame = Frame::rotating;
  double dt = 0.0;                    ///< 0 = automatic
  std::optional<double> pump_phase;   ///< unset: uniform random per sample
  double contrast_scale = 0.017;
  unsigned jobs = 1;
};

/// Two-level transfer sin^2 after a rectangular pulse of the given
/// transition Rabi frequency and duration, at probe detuning `detuning`.
double pulse_transfer(double detuning, double transition_rabi, double duration);

/// Standard deviation (MHz) of quasi-static detuning such that the pulse's
/// transfer profile, smeared by it, has FWHM `target_fwhm`. Returns 0 (and
/// warns) when the bare pulse is already broader.
double dephasing_sigma(double target_fwhm, double transition_rabi, double duration);

/// ODMR spectrum from first principles. For each absolute probe frequency
/// the probe pulse is propagated from initial_state(); the ms = 0 loss is
/// averaged over `detuning_samples` Gauss-Hermite quasi-static offsets of
/// width dephasing_sigma(1/(pi t2_star), ...), so carriers come out with
/// FWHM 1/(pi t2_star). Contrast = -contrast_scale * loss.
/// Pump phases come from streams keyed by (seed, point), so the output does
/// not depend on `jobs`.
Spectrum simulate_odmr(const NvParams& p, const PulseSequence& seq, std::span<const double> probe_freq_grid,
                       int detuning_samples, std::uint64_t seed, const OdmrOptions& opt = {});

}  // namespace tpmr
