#include "tpmr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "tpmr/bloch.hpp"
#include "tpmr/parallel.hpp"
#include "tpmr/rng.hpp"

namespace tpmr {

namespace {

constexpr double kGaussExponent = 4.0 * 0.69314718055994531;  // 4 ln 2

double effective_t1(const NvParams& p, const SynthSettings& s) { return std::min(p.t1, s.cycle_time); }

double line_value(int k, const NvParams& p, const DriveTone& pump, double probe_rabi, const SynthSettings& s) {
  const DriveTone probe = DriveTone::probe(probe_rabi, 1.0);
  return multiphoton_term(k, k * pump.freq, probe, pump, effective_t1(p, s), p.t2);
}

double carrier_reference(const NvParams& p, double probe_rabi, const SynthSettings& s) {
  return -steady_state_absorption(0.0, probe_rabi, effective_t1(p, s), p.t2);
}

void render(Spectrum& out, std::span<const SpectralLine> lines) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    double y = 0.0;
    for (const auto& l : lines) {
      const double u = (out.detuning[i] - l.center) / l.fwhm;
      y -= l.depth * std::exp(-kGaussExponent * u * u);
    }
    out.contrast[i] += y;
  }
}

void add_noise(Spectrum& out, double sigma, std::uint64_t seed) {
  if (sigma <= 0) return;
  auto rng = stream_for(seed, 0);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& c : out.contrast) c += noise(rng);
}

Spectrum blank(const SynthInputs& in) {
  in.nv.validate();
  if (!(in.probe_rabi > 0)) throw std::invalid_argument("probe.rabi must be > 0");
  if (!(in.noise_sigma >= 0)) throw std::invalid_argument("synth.noise_sigma must be >= 0");
  Spectrum s;
  s.detuning = in.grid;
  s.contrast.assign(in.grid.size(), 0.0);
  s.validate();
  s.set_meta("generator", "synth");
  s.set_meta("seed", std::to_string(in.seed));
  s.set_meta("f0_mhz", center_frequency(in.nv));
  s.set_meta("a_hf_mhz", in.nv.a_hf);
  s.set_meta("probe_rabi_mhz", in.probe_rabi);
  s.set_meta("pump_rabi_mhz", in.pump.rabi);
  s.set_meta("pump_freq_mhz", in.pump.freq);
  s.set_meta("t2_star_us", in.nv.t2_star);
  s.set_meta("noise_sigma", in.noise_sigma);
  s.set_meta("contrast_scale", in.settings.contrast_scale);
  s.set_meta("width_ratio", in.settings.width_ratio);
  return s;
}

}  // namespace

std::vector<SpectralLine> spectral_lines(const NvParams& p, const DriveTone& pump, double probe_rabi,
                                         const SynthSettings& settings) {
  if (!(settings.width_ratio > 0)) throw std::invalid_argument("synth.width_ratio must be > 0");
  if (!(settings.cycle_time > 0)) throw std::invalid_argument("synth.cycle_time must be > 0");
  if (!(pump.freq > 0)) throw std::invalid_argument("pump.freq must be > 0");
  const double carrier_fwhm = 1.0 / (kPi * p.t2_star);
  const double ref = carrier_reference(p, probe_rabi, settings);
  std::vector<SpectralLine> lines;
  for (int mi : {1, 0, -1}) {
    // Transition |0,mI> <-> |-1,mI> sits at f0 - A mI.
    const double carrier = -p.a_hf * mi;
    for (int k : {-1, 0, 1}) {
      const double depth = settings.contrast_scale * line_value(k, p, pump, probe_rabi, settings) / ref;
      if (depth <= 0) continue;
      const double fwhm = k == 0 ? carrier_fwhm : carrier_fwhm * settings.width_ratio;
      lines.push_back({carrier - k * pump.freq, fwhm, depth, k, mi});
    }
  }
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.center < b.center; });
  return lines;
}

double sideband_visibility(const NvParams& p, const DriveTone& pump, double probe_rabi,
                           const SynthSettings& settings) {
  return line_value(1, p, pump, probe_rabi, settings) / line_value(0, p, pump, probe_rabi, settings);
}

double power_to_rabi(double power_mw, double kappa) {
  if (!(power_mw >= 0)) throw std::invalid_argument("pump power must be >= 0");
  if (!(kappa > 0)) throw std::invalid_argument("kappa must be > 0");
  return kappa * std::sqrt(power_mw);
}

Spectrum synth_spectrum(const SynthInputs& in) {
  Spectrum s = blank(in);
  const auto lines = spectral_lines(in.nv, in.pump, in.probe_rabi, in.settings);
  render(s, lines);
  add_noise(s, in.noise_sigma, in.seed);
  return s;
}

Spectrum synth_spectrum(const NvParams& p, const DriveTone& pump, double probe_rabi, std::span<const double> grid,
                        double noise_sigma, std::uint64_t seed, const SynthSettings& settings) {
  SynthInputs in{p, pump, probe_rabi, {grid.begin(), grid.end()}, noise_sigma, seed, settings};
  return synth_spectrum(in);
}

std::uint64_t sweep_seed(std::uint64_t seed, std::size_t index) { return stream_for(seed, index + 1)(); }

std::vector<Spectrum> sweep(const NvParams& p, SweepAxis axis, std::span<const double> values,
                            const SweepFixed& fixed, std::span<const double> grid, std::uint64_t seed,
                            unsigned jobs) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  std::vector<Spectrum> out(values.size());
  parallel_for(values.size(), jobs, [&](std::size_t i) {
    const double power = axis == SweepAxis::pump_power ? values[i] : fixed.pump_power_mw;
    const double freq = axis == SweepAxis::pump_freq ? values[i] : fixed.pump_freq;
    const DriveTone pump = DriveTone::pump(power_to_rabi(power, fixed.kappa), freq);
    SynthInputs in{p, pump, fixed.probe_rabi, {grid.begin(), grid.end()}, fixed.noise_sigma, sweep_seed(seed, i),
                   fixed.settings};
    out[i] = synth_spectrum(in);
    out[i].set_meta("pump_power_mw", power);
    out[i].set_meta("kappa", fixed.kappa);
    out[i].set_meta("sweep_axis", axis == SweepAxis::pump_power ? "pump_power" : "pump_freq");
    out[i].set_meta("sweep_value", values[i]);
  });
  return out;
}

SpurModel SpurModel::measured(double pump_power_mw) {
  SpurModel m;
  m.rows = {{63.0, {-48.0, -15.0}}};
  m.onset_mw = 5.0;
  m.pump_power_mw = pump_power_mw;
  return m;
}

namespace {

std::vector<double> interpolate_row(const SpurModel& model) {
  const auto& rows = model.rows;
  if (rows.empty()) return {};
  const double p = model.pump_power_mw;
  if (p <= rows.front().power_mw) return rows.front().db_by_order;
  if (p >= rows.back().power_mw) return rows.back().db_by_order;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (p > rows[i].power_mw) continue;
    const auto& lo = rows[i - 1];
    const auto& hi = rows[i];
    const double w = std::log(p / lo.power_mw) / std::log(hi.power_mw / lo.power_mw);
    const std::size_t n = std::min(lo.db_by_order.size(), hi.db_by_order.size());
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = (1.0 - w) * lo.db_by_order[k] + w * hi.db_by_order[k];
    return out;
  }
  return rows.back().db_by_order;
}

}  // namespace

std::vector<SpurLine> spur_lines(double f_probe, double f_pump, int max_order, const SpurModel& model) {
  if (max_order < 0) throw std::invalid_argument("spurs.max_order must be >= 0");
  for (std::size_t i = 0; i < model.rows.size(); ++i) {
    if (!(model.rows[i].power_mw > 0)) throw std::invalid_argument("spur table powers must be > 0");
    if (i > 0 && !(model.rows[i].power_mw > model.rows[i - 1].power_mw))
      throw std::invalid_argument("spur table powers must be ascending");
    for (double db : model.rows[i].db_by_order)
      if (db > 0) throw std::invalid_argument("spur amplitudes must be <= 0 dB");
  }
  std::vector<SpurLine> lines{{0, f_probe, 0.0}};
  if (model.pump_power_mw < model.onset_mw) return lines;
  const auto levels = interpolate_row(model);
  for (int n = 1; n <= max_order; ++n) {
    if (static_cast<std::size_t>(n) > levels.size()) break;
    const double db = levels[n - 1];
    lines.push_back({-n, f_probe - n * f_pump, db});
    lines.push_back({n, f_probe + n * f_pump, db});
  }
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.freq < b.freq; });
  return lines;
}

double spur_depth_ratio(double amplitude_db) {
  const double s = std::sin(0.5 * kPi * std::pow(10.0, amplitude_db / 20.0));
  return s * s;
}

Spectrum apply_spurs(const SynthInputs& base, std::span<const SpurLine> spurs) {
  Spectrum s = blank(base);
  auto lines = spectral_lines(base.nv, base.pump, base.probe_rabi, base.settings);
  double reference = std::numeric_limits<double>::quiet_NaN();
  for (const auto& sp : spurs)
    if (sp.n == 0) reference = sp.freq;
  std::vector<SpectralLine> extra;
  for (const auto& sp : spurs) {
    if (sp.n == 0) continue;
    if (sp.amplitude_db > 0) throw std::invalid_argument("spur amplitude must be <= 0 dB");
    const double shift = std::isnan(reference) ? sp.n * base.pump.freq : sp.freq - reference;
    const double ratio = spur_depth_ratio(sp.amplitude_db);
    for (const auto& l : lines) {
      if (l.order != 0) continue;
      extra.push_back({l.center - shift, l.fwhm, l.depth * ratio, 0, l.mi});
    }
  }
  lines.insert(lines.end(), extra.begin(), extra.end());
  render(s, lines);
  add_noise(s, base.noise_sigma, base.seed);
  s.set_meta("spur_count", static_cast<double>(spurs.size()));
  return s;
}

}  // namespace tpmr
