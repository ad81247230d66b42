#include "tpmr/dynamics.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "tpmr/log.hpp"
#include "tpmr/parallel.hpp"
#include "tpmr/quadrature.hpp"
#include "tpmr/rng.hpp"
#include "tpmr/units.hpp"

namespace tpmr {

// ---------------------------------------------------------------------------
// DensityState

DensityState DensityState::pure(SpinLabel s) {
  if (!s.valid()) throw std::invalid_argument("spin label out of range");
  DensityState d;
  d.rho(index(s), index(s)) = 1.0;
  return d;
}

double DensityState::electron_population(int ms) const {
  double p = 0.0;
  for (int mi = -1; mi <= 1; ++mi) p += population({ms, mi});
  return p;
}

bool DensityState::is_physical(double tol) const {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rho.trace() - Complex(1.0)) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix9cd> eig(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-9;
}

DensityState initial_state() {
  DensityState d;
  for (int mi = -1; mi <= 1; ++mi) d.rho(DensityState::index({0, mi}), DensityState::index({0, mi})) = 1.0 / 3.0;
  return d;
}

// ---------------------------------------------------------------------------
// Operators and Hamiltonians

Matrix9cd electron_sx() {
  Matrix9cd sx = Matrix9cd::Zero();
  const double e = 1.0 / std::sqrt(2.0);
  for (int mi = -1; mi <= 1; ++mi) {
    for (int ms : {1, -1}) {
      const int a = DensityState::index({0, mi});
      const int b = DensityState::index({ms, mi});
      sx(a, b) = e;
      sx(b, a) = e;
    }
  }
  return sx;
}

Matrix9cd electron_sz() {
  Matrix9cd sz = Matrix9cd::Zero();
  for (int ms = -1; ms <= 1; ++ms)
    for (int mi = -1; mi <= 1; ++mi) sz(DensityState::index({ms, mi}), DensityState::index({ms, mi})) = ms;
  return sz;
}

namespace {

Matrix9cd static_hamiltonian(const NvParams& p) {
  Matrix9cd h = Matrix9cd::Zero();
  for (int ms = -1; ms <= 1; ++ms)
    for (int mi = -1; mi <= 1; ++mi) {
      const int i = DensityState::index({ms, mi});
      h(i, i) = angular(energy_level(p, {ms, mi}));
    }
  return h;
}

}  // namespace

Matrix9cd lab_hamiltonian(const NvParams& p, const DriveTone& probe, const DriveTone& pump, double t,
                          double pump_phase) {
  return static_hamiltonian(p) +
         2.0 * angular(probe.rabi) * std::cos(angular(probe.freq) * t) * electron_sx() +
         2.0 * angular(pump.rabi) * std::cos(angular(pump.freq) * t + pump_phase) * electron_sz();
}

Matrix9cd frame_hamiltonian(const NvParams& p, const DriveTone& probe, const DriveTone& pump, double t,
                            const PropagationOptions& opt) {
  if (opt.frame == Frame::lab) {
    return lab_hamiltonian(p, probe, pump, t, opt.pump_phase) + angular(opt.detuning) * electron_sz();
  }
  Matrix9cd h = static_hamiltonian(p) + angular(opt.detuning) * electron_sz();
  for (int ms : {1, -1})
    for (int mi = -1; mi <= 1; ++mi) {
      const int i = DensityState::index({ms, mi});
      h(i, i) -= angular(probe.freq);
    }
  h += angular(probe.rabi) * electron_sx();
  h += 2.0 * angular(pump.rabi) * std::cos(angular(pump.freq) * t + opt.pump_phase) * electron_sz();
  return h;
}

// ---------------------------------------------------------------------------
// Propagation engine
//
// Every term except the probe coupling is diagonal in the product basis and
// the probe never touches the nucleus, so the problem splits into three
// independent 3-level manifolds (one per mI). Within a manifold the diagonal
// phases theta_j(t) are integrated analytically and RK4 only sees the small
// probe coupling in that interaction picture.

namespace {

constexpr std::array<int, 3> kLevelMs{1, 0, -1};

struct Model {
  std::array<std::array<double, 3>, 3> eps{};  // [manifold][level] MHz, frame-shifted diagonal
  double z = 0.0;                              // pump modulation index 2 w2 / f_rf
  double w_rf = 0.0;                           // rad/us
  double phase = 0.0;
  bool lab = false;
  double coupling = 0.0;                       // rad/us (rotating) or cos amplitude (lab)
  double w_mw = 0.0;                           // rad/us
};

Model make_model(const NvParams& p, const DriveTone& probe, const DriveTone& pump, const PropagationOptions& opt) {
  Model m;
  m.lab = opt.frame == Frame::lab;
  for (int k = 0; k < 3; ++k) {
    const int mi = 1 - k;
    for (int j = 0; j < 3; ++j) {
      const int ms = kLevelMs[j];
      double e = energy_level(p, {ms, mi}) + opt.detuning * ms;
      if (!m.lab) e -= probe.freq * ms * ms;
      m.eps[k][j] = e;
    }
  }
  m.z = 2.0 * pump.rabi / pump.freq;
  m.w_rf = angular(pump.freq);
  m.phase = opt.pump_phase;
  m.w_mw = angular(probe.freq);
  m.coupling = m.lab ? angular(probe.rabi) * std::sqrt(2.0) : angular(probe.rabi) / std::sqrt(2.0);
  return m;
}

double fastest_frequency(const Model& m, const DriveTone& probe, const DriveTone& pump) {
  double gap = 0.0;
  for (const auto& e : m.eps) gap = std::max({gap, std::abs(e[1] - e[0]), std::abs(e[1] - e[2])});
  if (m.lab) gap += probe.freq;
  return std::max({gap + 2.0 * pump.rabi, pump.freq, std::sqrt(2.0) * probe.rabi});
}

struct Couplings {
  Complex plus;   // <0|V_I|+1>^*: coupling of ms=0 to ms=+1
  Complex minus;  // coupling of ms=0 to ms=-1
};

template <int Cols>
using Block = Eigen::Matrix<Complex, 3, Cols>;

template <int Cols>
inline Block<Cols> derivative(const Couplings& g, const Block<Cols>& c) {
  const Complex mi(0.0, -1.0);
  Block<Cols> d;
  for (int col = 0; col < Cols; ++col) {
    d(0, col) = mi * std::conj(g.plus) * c(1, col);
    d(1, col) = mi * (g.plus * c(0, col) + g.minus * c(2, col));
    d(2, col) = mi * std::conj(g.minus) * c(1, col);
  }
  return d;
}

// Phase rotors advanced by complex multiplication on the half-step lattice
// t0 + q h/2 and re-anchored periodically against direct evaluation.
class Clock {
 public:
  Clock(const Model& m, double t0, double h) : m_(m), t0_(t0), half_(0.5 * h) {
    for (int k = 0; k < 3; ++k) {
      rate_[2 * k] = angular(m.eps[k][1] - m.eps[k][0]);
      rate_[2 * k + 1] = angular(m.eps[k][1] - m.eps[k][2]);
    }
    rate_[6] = m.w_rf;
    rate_[7] = m.w_mw;
    for (int r = 0; r < kRotors; ++r) step_[r] = std::polar(1.0, rate_[r] * half_);
    sin_phase_ = std::sin(m.phase);
    anchor(0);
  }

  /// Couplings at lattice point q (monotonically increasing calls).
  void couplings(std::size_t q, std::array<Couplings, 3>& out) {
    while (q_ < q) {
      ++q_;
      if (q_ % kAnchorEvery == 0) {
        anchor(q_);
      } else {
        for (int r = 0; r < kRotors; ++r) rotor_[r] *= step_[r];
      }
    }
    const double s = rotor_[6].imag() - sin_phase_;
    const Complex pump = std::polar(1.0, -m_.z * s);
    const double c = m_.lab ? m_.coupling * rotor_[7].real() : m_.coupling;
    for (int k = 0; k < 3; ++k) {
      out[k].plus = c * rotor_[2 * k] * pump;
      out[k].minus = c * rotor_[2 * k + 1] * std::conj(pump);
    }
  }

 private:
  static constexpr int kRotors = 8;
  static constexpr std::size_t kAnchorEvery = 256;

  void anchor(std::size_t q) {
    q_ = q;
    const double t = t0_ + static_cast<double>(q) * half_;
    for (int r = 0; r < 6; ++r) rotor_[r] = std::polar(1.0, rate_[r] * t);
    rotor_[6] = std::polar(1.0, m_.w_rf * t + m_.phase);
    rotor_[7] = std::polar(1.0, m_.w_mw * t);
  }

  const Model& m_;
  double t0_;
  double half_;
  std::array<double, kRotors> rate_{};
  std::array<Complex, kRotors> step_{};
  std::array<Complex, kRotors> rotor_{};
  double sin_phase_ = 0.0;
  std::size_t q_ = 0;
};

// Advances interaction-picture blocks (one per manifold) from t0 by n steps of h.
template <int Cols>
void evolve(const Model& m, double t0, double h, std::size_t n, std::array<Block<Cols>, 3>& c) {
  Clock clock(m, t0, h);
  std::array<Couplings, 3> g0, g1, g2;
  clock.couplings(0, g0);
  for (std::size_t step = 0; step < n; ++step) {
    clock.couplings(2 * step + 1, g1);
    clock.couplings(2 * step + 2, g2);
    for (int k = 0; k < 3; ++k) {
      const Block<Cols>& y = c[k];
      const Block<Cols> k1 = derivative<Cols>(g0[k], y);
      const Block<Cols> k2 = derivative<Cols>(g1[k], y + (0.5 * h) * k1);
      const Block<Cols> k3 = derivative<Cols>(g1[k], y + (0.5 * h) * k2);
      const Block<Cols> k4 = derivative<Cols>(g2[k], y + h * k3);
      c[k] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    g0 = g2;
  }
}

// Analytic diagonal phase theta_j(t).
double diagonal_phase(const Model& m, int k, int j, double t) {
  return angular(m.eps[k][j]) * t + kLevelMs[j] * m.z * (std::sin(m.w_rf * t + m.phase) - std::sin(m.phase));
}

std::array<int, 3> manifold_indices(int k) {
  const int mi = 1 - k;
  return {DensityState::index({1, mi}), DensityState::index({0, mi}), DensityState::index({-1, mi})};
}

// Full 9x9 Schrodinger-picture propagator from t0 to t0 + n h.
Matrix9cd propagator(const Model& m, double t0, double h, std::size_t n) {
  std::array<Block<3>, 3> u;
  for (auto& b : u) b.setIdentity();
  evolve<3>(m, t0, h, n, u);
  const double t1 = t0 + h * static_cast<double>(n);
  Matrix9cd full = Matrix9cd::Zero();
  for (int k = 0; k < 3; ++k) {
    const auto idx = manifold_indices(k);
    for (int a = 0; a < 3; ++a) {
      const Complex out_phase = std::polar(1.0, -diagonal_phase(m, k, a, t1));
      for (int b = 0; b < 3; ++b) {
        const Complex in_phase = std::polar(1.0, diagonal_phase(m, k, b, t0));
        full(idx[a], idx[b]) = out_phase * u[k](a, b) * in_phase;
      }
    }
  }
  return full;
}

std::size_t step_count(double duration, double dt) {
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

double resolve_dt(double dt, double limit) {
  if (dt <= 0) return limit;
  if (dt > limit * (1.0 + 1e-12))
    throw std::invalid_argument(
        fmt::format("propagate: dt = {:.3e} us exceeds the step limit {:.3e} us (1/(50 f_max))", dt, limit));
  return dt;
}

}  // namespace

double max_time_step(const NvParams& p, const DriveTone& probe, const DriveTone& pump,
                     const PropagationOptions& opt) {
  const Model m = make_model(p, probe, pump, opt);
  return 1.0 / (50.0 * fastest_frequency(m, probe, pump));
}

Propagation propagate(const DensityState& rho0, const NvParams& p, const DriveTone& probe, const DriveTone& pump,
                      double duration, double dt, const PropagationOptions& opt) {
  if (!(duration >= 0)) throw std::invalid_argument("propagate: duration must be >= 0");
  const double h_max = resolve_dt(dt, max_time_step(p, probe, pump, opt));
  Propagation out;
  out.state = rho0;
  if (duration == 0) return out;
  const Model m = make_model(p, probe, pump, opt);
  const std::size_t n = step_count(duration, h_max);
  const Matrix9cd u = propagator(m, 0.0, duration / static_cast<double>(n), n);
  out.state.rho = u * rho0.rho * u.adjoint();
  out.steps = n;
  if (opt.estimate_error) {
    const std::size_t n2 = (n + 1) / 2;
    const Matrix9cd u2 = propagator(m, 0.0, duration / static_cast<double>(n2), n2);
    const Matrix9cd coarse = u2 * rho0.rho * u2.adjoint();
    out.error_estimate = (out.state.rho - coarse).cwiseAbs().maxCoeff() / 15.0;
    out.steps += n2;
  }
  return out;
}

std::vector<double> ms0_population_trace(const DensityState& rho0, const NvParams& p, const DriveTone& probe,
                                         const DriveTone& pump, std::span<const double> times, double dt,
                                         const PropagationOptions& opt) {
  const double h_max = resolve_dt(dt, max_time_step(p, probe, pump, opt));
  const Model m = make_model(p, probe, pump, opt);
  std::vector<double> out;
  out.reserve(times.size());
  Matrix9cd u = Matrix9cd::Identity();
  double t = 0.0;
  for (const double target : times) {
    if (!(target >= t)) throw std::invalid_argument("ms0_population_trace: times must be ascending and >= 0");
    if (target > t) {
      const std::size_t n = step_count(target - t, h_max);
      u = propagator(m, t, (target - t) / static_cast<double>(n), n) * u;
      t = target;
    }
    DensityState s;
    s.rho = u * rho0.rho * u.adjoint();
    out.push_back(s.electron_population(0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ODMR

void PulseSequence::validate() const {
  if (!(probe_duration > 0)) throw std::invalid_argument("sequence.probe_duration must be > 0");
  if (!(laser_duration >= 0)) throw std::invalid_argument("sequence.laser_duration must be >= 0");
  probe_tone.validate();
  pump_tone.validate();
}

double pi_pulse_rabi(double duration) {
  if (!(duration > 0)) throw std::invalid_argument("pi_pulse_rabi: duration must be > 0");
  return 1.0 / (2.0 * std::sqrt(2.0) * duration);
}

double pulse_transfer(double detuning, double transition_rabi, double duration) {
  const double w2 = transition_rabi * transition_rabi;
  const double g2 = w2 + detuning * detuning;
  if (g2 == 0.0) return 0.0;
  const double s = std::sin(kPi * std::sqrt(g2) * duration);
  return w2 / g2 * s * s;
}

namespace {

// Transfer profile of the pulse smeared by a Gaussian of standard deviation
// sigma, trapezoid rule over +-6 sigma.
double smeared_transfer(double detuning, double sigma, double rabi, double duration) {
  if (sigma <= 0) return pulse_transfer(detuning, rabi, duration);
  constexpr int kNodes = 1200;
  const double h = 12.0 * sigma / kNodes;
  double acc = 0.0;
  for (int i = 0; i <= kNodes; ++i) {
    const double u = -6.0 * sigma + i * h;
    const double w = (i == 0 || i == kNodes) ? 0.5 : 1.0;
    acc += w * std::exp(-0.5 * u * u / (sigma * sigma)) * pulse_transfer(detuning - u, rabi, duration);
  }
  return acc * h / (sigma * std::sqrt(kTwoPi));
}

double smeared_fwhm(double sigma, double rabi, double duration) {
  const double half = 0.5 * smeared_transfer(0.0, sigma, rabi, duration);
  double lo = 0.0, hi = 6.0 * sigma + 10.0 / duration + 10.0 * rabi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (smeared_transfer(mid, sigma, rabi, duration) > half ? lo : hi) = mid;
  }
  return lo + hi;
}

}  // namespace

double dephasing_sigma(double target_fwhm, double transition_rabi, double duration) {
  if (!(target_fwhm > 0) || !(transition_rabi > 0) || !(duration > 0))
    throw std::invalid_argument("dephasing_sigma: arguments must be > 0");
  double lo = 0.0, hi = target_fwhm / kFwhmPerSigma;
  if (smeared_fwhm(lo, transition_rabi, duration) >= target_fwhm) {
    log::warn("probe pulse alone is broader than the requested linewidth; no quasi-static broadening applied");
    return 0.0;
  }
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (smeared_fwhm(mid, transition_rabi, duration) < target_fwhm ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Spectrum simulate_odmr(const NvParams& p, const PulseSequence& seq, std::span<const double> probe_freq_grid,
                       int detuning_samples, std::uint64_t seed, const OdmrOptions& opt) {
  p.validate();
  seq.validate();
  if (probe_freq_grid.empty()) throw std::invalid_argument("simulate_odmr: empty probe grid");
  for (std::size_t i = 1; i < probe_freq_grid.size(); ++i)
    if (!(probe_freq_grid[i] > probe_freq_grid[i - 1]))
      throw std::invalid_argument("simulate_odmr: probe grid must be ascending");
  if (detuning_samples < 1) throw std::invalid_argument("simulate_odmr: detuning_samples must be >= 1");

  const QuadratureRule rule = gauss_hermite(detuning_samples);
  const double sigma =
      dephasing_sigma(1.0 / (kPi * p.t2_star), std::sqrt(2.0) * seq.probe_tone.rabi, seq.probe_duration);
  const double f0 = center_frequency(p);

  std::vector<double> loss(probe_freq_grid.size());
  parallel_for(probe_freq_grid.size(), opt.jobs, [&](std::size_t i) {
    auto rng = stream_for(seed, i);
    std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
    DriveTone probe = seq.probe_tone;
    probe.freq = probe_freq_grid[i];
    double survived = 0.0;
    for (int j = 0; j < detuning_samples; ++j) {
      PropagationOptions po;
      po.frame = opt.frame;
      po.detuning = sigma * rule.nodes[j];
      po.pump_phase = opt.pump_phase ? *opt.pump_phase : phase_dist(rng);
      const double h_max = resolve_dt(opt.dt, max_time_step(p, probe, seq.pump_tone, po));
      const Model m = make_model(p, probe, seq.pump_tone, po);
      const std::size_t n = step_count(seq.probe_duration, h_max);
      // Only the ms = 0 column of each manifold is needed for this start state.
      std::array<Block<1>, 3> c;
      for (auto& b : c) b = Block<1>(Complex(0.0), Complex(1.0), Complex(0.0));
      evolve<1>(m, 0.0, seq.probe_duration / static_cast<double>(n), n, c);
      double p0 = 0.0;
      for (const auto& b : c) p0 += std::norm(b(1, 0)) / 3.0;
      survived += rule.weights[j] * p0;
    }
    loss[i] = 1.0 - survived;
  });

  Spectrum s;
  s.detuning.resize(loss.size());
  s.contrast.resize(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) {
    s.detuning[i] = probe_freq_grid[i] - f0;
    s.contrast[i] = -opt.contrast_scale * loss[i];
  }
  s.set_meta("generator", "oracle");
  s.set_meta("seed", std::to_string(seed));
  s.set_meta("f0_mhz", f0);
  s.set_meta("a_hf_mhz", p.a_hf);
  s.set_meta("probe_rabi_mhz", seq.probe_tone.rabi);
  s.set_meta("probe_duration_us", seq.probe_duration);
  s.set_meta("pump_rabi_mhz", seq.pump_tone.rabi);
  s.set_meta("pump_freq_mhz", seq.pump_tone.freq);
  s.set_meta("t2_star_us", p.t2_star);
  s.set_meta("dephasing_sigma_mhz", sigma);
  s.set_meta("detuning_samples", std::to_string(detuning_samples));
  s.set_meta("frame", opt.frame == Frame::lab ? "lab" : "rotating");
  s.set_meta("contrast_scale", opt.contrast_scale);
  return s;
}

}  // namespace tpmr
