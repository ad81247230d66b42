// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "oracles.hpp"
#include "tpmr/bloch.hpp"
#include "tpmr/cli.hpp"
#include "tpmr/config.hpp"
#include "tpmr/dynamics.hpp"
#include "tpmr/fitting.hpp"
#include "tpmr/log.hpp"
#include "tpmr/parallel.hpp"
#include "tpmr/spin_model.hpp"
#include "tpmr/synth.hpp"
#include "tpmr/validation.hpp"

using namespace tpmr;
namespace fs = std::filesystem;

namespace tol {
constexpr double kCenter = 0.05;            // MHz, nine-dip law
constexpr double kSynthSeconds = 1.0;
constexpr double kOracleSeconds = 300.0;
constexpr double kSlopeClean = 0.01;
constexpr double kSlopeNoisy = 0.03;
constexpr double kNoise = 1e-3;
constexpr int kSeeds = 100;
constexpr double kSeedFraction = 0.95;
constexpr double kPositionSpread = 0.02;    // MHz
constexpr double kRabi = 0.05;              // relative
constexpr double kValidateSeconds = 600.0;
constexpr double kBloch = 1e-9;
constexpr double kBlochSeconds = 10.0;
constexpr double kSpurRatio = 1e-3;
constexpr double kVisibleRatio = 0.1;
constexpr double kWidth = 0.05;             // relative
}  // namespace tol

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

const double kPump = 5.3;

std::vector<double> nine_centers(const NvParams& p, double f_pump) {
  std::vector<double> out;
  for (double c : {-p.a_hf, 0.0, p.a_hf})
    for (double k : {-1.0, 0.0, 1.0}) out.push_back(c + k * f_pump);
  std::sort(out.begin(), out.end());
  return out;
}

// Largest distance from a predicted centre to its nearest fitted dip, and
// vice versa.
double center_error(const FitResult& fit, const std::vector<double>& expected) {
  double worst = 0;
  for (double c : expected) worst = std::max(worst, std::abs(nearest_dip(fit, c).center - c));
  for (const auto& d : fit.dips) {
    double best = 1e300;
    for (double c : expected) best = std::min(best, std::abs(d.center - c));
    worst = std::max(worst, best);
  }
  return worst;
}

FitOptions with_hint(double f_pump) {
  FitOptions o;
  o.pump_hint = f_pump;
  return o;
}

Spectrum synth_at(const NvParams& p, double power_mw, double f_pump, std::span<const double> grid, double noise,
                  std::uint64_t seed) {
  return synth_spectrum(p, DriveTone::pump(power_to_rabi(power_mw, kDefaultKappa), f_pump), 0.09, grid, noise, seed);
}

Outcome nine_dip_law() {
  NvParams p;
  const auto expected = nine_centers(p, kPump);
  const auto grid = make_grid(-10, 10, 0.02);

  auto t0 = Clock::now();
  const Spectrum s = synth_at(p, 63.0, kPump, grid, 0.0, 1);
  const double synth_time = seconds_since(t0);
  const FitResult fs = fit_gaussians(s, 9, {}, with_hint(kPump));
  const double synth_err = center_error(fs, expected);

  const RunConfig cfg = load_config(std::string(TPMR_SCENARIO_DIR) + "/oracle_fig4a.conf");
  std::vector<double> freqs = cfg.grid_points();
  const double f0 = center_frequency(cfg.nv);
  for (double& f : freqs) f += f0;
  OdmrOptions opt;
  opt.contrast_scale = cfg.synth.contrast_scale;
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  t0 = Clock::now();
  const Spectrum o = simulate_odmr(cfg.nv, cfg.sequence, freqs, 32, cfg.seed, opt);
  const double oracle_time = seconds_since(t0);
  const FitResult fo = fit_gaussians(o, 9, {}, with_hint(cfg.pump.freq));
  const double oracle_err = center_error(fo, nine_centers(cfg.nv, cfg.pump.freq));

  const bool pass = fs.converged && fo.converged && synth_err <= tol::kCenter && oracle_err <= tol::kCenter &&
                    synth_time < tol::kSynthSeconds && oracle_time < tol::kOracleSeconds;
  return {pass, fmt::format("synth max center error {:.4f} MHz in {:.3f} s; oracle {:.4f} MHz in {:.1f} s",
                            synth_err, synth_time, oracle_err, oracle_time)};
}

// Mean sideband offset from its own fitted carrier, over the sidebands that
// sit at least one carrier FWHM from every other predicted line.
double sideband_offset(const FitResult& fit, const NvParams& p, double f_pump) {
  const auto lines = nine_centers(p, f_pump);
  const double fwhm = 1.0 / (kPi * p.t2_star);
  double sum = 0;
  int used = 0;
  for (double c : {-p.a_hf, 0.0, p.a_hf})
    for (double sign : {-1.0, 1.0}) {
      const double pos = c + sign * f_pump;
      bool resolved = true;
      for (double other : lines)
        if (std::abs(other - pos) > 1e-9 && std::abs(other - pos) < fwhm) resolved = false;
      if (!resolved) continue;
      sum += sign * (nearest_dip(fit, pos).center - nearest_dip(fit, c).center);
      ++used;
    }
  return sum / used;
}

double splitting_slope(const NvParams& p, std::span<const double> freqs, double noise, std::uint64_t seed) {
  const auto grid = make_grid(-12, 12, 0.02);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const Spectrum s = synth_at(p, 63.0, freqs[i], grid, noise, sweep_seed(seed, i));
    pts.emplace_back(freqs[i], sideband_offset(fit_gaussians(s, 9, {}, with_hint(freqs[i])), p, freqs[i]));
  }
  return splitting_regression(pts).slope;
}

Outcome linear_splitting() {
  NvParams p;
  const std::vector<double> freqs{3, 4, 5, 6, 7, 8};
  const double clean = splitting_slope(p, freqs, 0.0, 1);
  std::vector<double> slopes(tol::kSeeds);
  parallel_for(slopes.size(), std::max(1u, std::thread::hardware_concurrency()),
               [&](std::size_t i) { slopes[i] = splitting_slope(p, freqs, tol::kNoise, 1000 + i); });
  const auto within = std::count_if(slopes.begin(), slopes.end(),
                                    [](double s) { return std::abs(s - 1.0) <= tol::kSlopeNoisy; });
  const double frac = static_cast<double>(within) / tol::kSeeds;
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  const bool pass = std::abs(clean - 1.0) <= tol::kSlopeClean && frac >= tol::kSeedFraction;
  return {pass, fmt::format("noiseless slope {:.6f}; noisy slopes in [{:.4f}, {:.4f}], {:.0f}% within 1 +- {}",
                            clean, *lo, *hi, 100 * frac, tol::kSlopeNoisy)};
}

Outcome power_invariance() {
  NvParams p;
  const std::vector<double> powers{0.63, 2.00, 10.0, 31.6, 63.0};
  const auto grid = make_grid(-10, 10, 0.02);
  const auto expected = nine_centers(p, kPump);
  std::vector<FitResult> fits;
  for (double mw : powers) fits.push_back(select_model(synth_at(p, mw, kPump, grid, 0.0, 1)));
  double spread = 0;
  for (double c : expected) {
    std::vector<double> seen;
    for (const auto& f : fits) {
      const auto& d = nearest_dip(f, c);
      if (std::abs(d.center - c) < 0.5) seen.push_back(d.center);
    }
    if (seen.size() > 1) spread = std::max(spread, *std::max_element(seen.begin(), seen.end()) -
                                                       *std::min_element(seen.begin(), seen.end()));
  }
  double onset = -1;
  std::string counts;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    counts += fmt::format("{}{}", i ? "/" : "", fits[i].n_peaks);
    if (onset < 0 && fits[i].n_peaks == 9) onset = powers[i];
  }
  const bool pass = spread < tol::kPositionSpread && onset > 2.0 && onset <= 31.6;
  return {pass, fmt::format("center spread {:.2e} MHz; dips per power {}; onset {} mW", spread, counts,
                            format_number(onset))};
}

Outcome sideband_rabi() {
  NvParams p;
  const std::vector<double> zs{0.1, 0.2, 0.3};
  std::vector<SidebandCheck> checks(zs.size());
  const auto t0 = Clock::now();
  parallel_for(zs.size(), std::max(1u, std::thread::hardware_concurrency()),
               [&](std::size_t i) { checks[i] = sideband_check(p, zs[i]); });
  const double elapsed = seconds_since(t0);
  bool pass = elapsed < tol::kValidateSeconds;
  std::string detail;
  for (const auto& c : checks) {
    const bool center_ok = std::abs(c.oracle_center - c.theory_center) <= c.scan_step * (1 + 1e-9);
    pass = pass && c.rabi_error < tol::kRabi && center_ok;
    detail += fmt::format("z={}: {:.2f}% center {} vs {}; ", format_number(c.z), 100 * c.rabi_error,
                          format_number(c.oracle_center), format_number(c.theory_center));
  }
  return {pass, detail + fmt::format("{:.1f} s", elapsed)};
}

Outcome bloch_closed_form() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> off(-5.0, 5.0), lr(-3.0, 1.0), lt2(-1.0, 1.0), lratio(0.0, 3.0);
  const auto t0 = Clock::now();
  double worst_oracle = 0, worst_cramer = 0, worst_gap = 0;
  for (int i = 0; i < 1000; ++i) {
    const double rabi = std::pow(10.0, lr(rng));
    const double t2 = std::pow(10.0, lt2(rng));
    const double t1 = t2 * std::pow(10.0, lratio(rng));
    const double o = off(rng);
    const double y = steady_state_absorption(o, rabi, t1, t2);
    const auto lib = bloch_steady_state_oracle(o, rabi, t1, t2);
    worst_oracle = std::max(worst_oracle, oracle::rel_err(y, lib.linear_solve.sigma[1]));
    // the integration route is accurate in absolute terms only (|sigma0| = 1)
    worst_gap = std::max(worst_gap, std::abs(y - lib.integrated.sigma[1]));
    worst_cramer = std::max(worst_cramer, oracle::rel_err(y, oracle::bloch_cramer(o, rabi, t1, t2)[1]));
  }
  double worst_reduction = 0;
  const DriveTone probe = DriveTone::probe(0.09, 2828.0);
  for (double o = -8; o <= 8; o += 0.05)
    for (int k_max : {0, 1, 3})
      worst_reduction = std::max(worst_reduction,
                                 std::abs(multiphoton_absorption(o, probe, DriveTone::pump(0.0, 5.3), 6000, 1, k_max) +
                                          steady_state_absorption(o, 0.09, 6000, 1)));
  const double elapsed = seconds_since(t0);
  const bool pass = worst_oracle <= tol::kBloch && worst_cramer <= tol::kBloch && worst_gap <= tol::kBloch &&
                    worst_reduction == 0.0 && elapsed < tol::kBlochSeconds;
  return {pass, fmt::format("max rel error {:.2e} (linear-solve oracle), {:.2e} (Cramer); max abs gap to "
                            "integrated route {:.2e}; pump-off reduction residual {:.1e}; {:.2f} s",
                            worst_oracle, worst_cramer, worst_gap, worst_reduction, elapsed)};
}

Outcome curve_shape() {
  std::vector<std::string> warnings;
  auto prev = log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const auto rf = make_grid(1.0, 8.0, 0.25);
  const auto curve = tpmr_intensity_curve(DriveTone::probe(0.09, 2828.0), 1.508, rf, 6000, 1, 1);
  log::set_warning_sink(prev);
  bool finite = true, monotone = true;
  int flagged = 0, below = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    finite = finite && std::isfinite(curve[i].intensity) && curve[i].intensity > 0;
    if (curve[i].omega_rf < kTheoryValidityRf) {
      ++below;
      flagged += !curve[i].valid;
    }
    if (i > 0 && curve[i - 1].omega_rf >= kTheoryValidityRf && !(curve[i].intensity < curve[i - 1].intensity))
      monotone = false;
  }
  const bool pass = finite && monotone && flagged == below && below > 0 && !warnings.empty();
  return {pass, fmt::format("{} points, finite and positive: {}, decreasing on [2.5, 8]: {}, {}/{} low-rf points "
                            "flagged, {} warning(s)",
                            curve.size(), finite, monotone, flagged, below, warnings.size())};
}

// Spur-induced dip depth relative to the central carrier, per |n|.
std::map<int, double> spur_ratios(const SynthInputs& in, std::span<const SpurLine> lines) {
  const Spectrum base = synth_spectrum(in);
  const Spectrum with = apply_spurs(in, lines);
  auto at = [&](const Spectrum& s, double x) {
    const auto it = std::lower_bound(s.detuning.begin(), s.detuning.end(), x - 1e-9);
    return s.contrast[static_cast<std::size_t>(it - s.detuning.begin())];
  };
  const double carrier = -at(base, 0.0);
  std::map<int, double> out;
  for (const auto& l : lines) {
    if (l.n == 0) continue;
    const double x = -l.n * in.pump.freq;
    out[std::abs(l.n)] = std::max(out[std::abs(l.n)], std::abs(at(with, x) - at(base, x)) / carrier);
  }
  return out;
}

Outcome spur_negligibility() {
  SynthInputs in;
  in.pump = DriveTone::pump(power_to_rabi(63.0, kDefaultKappa), kPump);
  in.grid = make_grid(-12, 12, 0.01);
  const auto measured = spur_ratios(in, spur_lines(2822.0, kPump, 2, SpurModel::measured(63.0)));
  SpurModel loud = SpurModel::measured(63.0);
  for (auto& row : loud.rows)
    for (double& db : row.db_by_order) db = 0.0;
  const auto boosted = spur_ratios(in, spur_lines(2822.0, kPump, 2, loud));
  bool pass = true;
  std::string detail;
  for (const auto& [n, r] : measured) {
    pass = pass && r < tol::kSpurRatio;
    detail += fmt::format("|n|={}: {:.2e} ", n, r);
  }
  for (const auto& [n, r] : boosted) {
    pass = pass && r > tol::kVisibleRatio;
    detail += fmt::format("(0 dB |n|={}: {:.2f}) ", n, r);
  }
  return {pass, "spur/carrier depth " + detail + fmt::format("limit {:.0e}", tol::kSpurRatio)};
}

Outcome linewidths() {
  NvParams p;
  const FitResult fit = fit_gaussians(synth_at(p, 63.0, kPump, make_grid(-10, 10, 0.01), 0.0, 1), 9, {},
                                      with_hint(kPump));
  double worst = 0;
  for (double c : nine_centers(p, kPump)) {
    const bool carrier = std::abs(std::abs(c) - p.a_hf) < 1e-9 || c == 0.0;
    const double want = carrier ? 0.71 : 0.32;
    worst = std::max(worst, std::abs(nearest_dip(fit, c).fwhm - want) / want);
  }
  const double t_carrier = extract_t2star({0.0, 0.71, 1.0});
  const double t_side = extract_t2star({0.0, 0.32, 1.0});
  const double ratio = t_side / t_carrier;
  const bool pass = worst <= tol::kWidth && std::abs(t_carrier - 1.408) < 5e-4 && std::abs(t_side - 3.125) < 5e-4;
  return {pass, fmt::format("max width error {:.2f}%; t2* {:.3f} / {:.3f} us; ratio {:.2f} "
                            "(FLAG: reported elsewhere as 2.6, the widths give {:.2f})",
                            100 * worst, t_carrier, t_side, ratio, ratio)};
}

Outcome nmr_exclusion() {
  NvParams p;
  const FitResult fit = fit_gaussians(synth_at(p, 63.0, kPump, make_grid(-10, 10, 0.02), 0.0, 1), 9, {},
                                      with_hint(kPump));
  const double f0 = center_frequency(p);
  double margin = 1e300;
  std::string closest;
  for (double line : nmr_lines(p)) {
    const double x = line - f0;
    for (const auto& d : fit.dips) {
      const double m = std::abs(x - d.center) - 0.5 * d.fwhm;
      if (m < margin) {
        margin = m;
        closest = fmt::format("NMR line at {:+.2f} MHz vs dip {:+.3f} (FWHM {:.3f})", x, d.center, d.fwhm);
      }
    }
  }
  return {margin > 0, fmt::format("closest approach {}, clearance {:.3f} MHz beyond the half-width", closest, margin)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "tpmr_acceptance_fig3";
  fs::remove_all(root);
  std::ostringstream sink;
  const int a = run_cli({"--seed", "7", "--out", (root / "a").string(), "fig3"}, sink, sink);
  const int b = run_cli({"--seed", "7", "--out", (root / "b").string(), "fig3"}, sink, sink);
  if (a != 0 || b != 0) return {false, fmt::format("fig3 exit codes {} and {}", a, b)};
  int files = 0, same = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    same += slurp(e.path()) == slurp(root / "b" / e.path().filename());
  }
  fs::remove_all(root);
  return {files > 0 && same == files, fmt::format("{}/{} output files byte-identical", same, files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"nine-dip law", nine_dip_law},
      {"linear splitting", linear_splitting},
      {"position invariance under power", power_invariance},
      {"sideband Rabi vs effective theory", sideband_rabi},
      {"closed-form Bloch check", bloch_closed_form},
      {"intensity curve shape", curve_shape},
      {"spur negligibility", spur_negligibility},
      {"linewidth round trip", linewidths},
      {"NMR exclusion", nmr_exclusion},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::cout << fmt::format("criterion {:2d} {} {}: {}", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].first,
                             r.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
