#include "tpmr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <variant>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tpmr/bloch.hpp"
#include "tpmr/config.hpp"
#include "tpmr/errors.hpp"
#include "tpmr/log.hpp"
#include "tpmr/parallel.hpp"
#include "tpmr/validation.hpp"

namespace tpmr {

namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Presets

constexpr std::string_view kFig3 = R"(# Pump-power series at fixed pump frequency.
sweep.axis = pump_power
sweep.powers = 0.63, 2.00, 10.0, 31.6, 63.0
pump.freq = 5.3
grid.start = -10
grid.stop = 10
grid.step = 0.02
)";

constexpr std::string_view kFig4 = R"(# Nine-dip spectrum, pump-frequency series and pump-off reference.
pump.power_mw = 63.0
pump.freq = 5.3
sweep.axis = pump_freq
sweep.freqs = 3, 4, 5, 6, 7, 8
grid.start = -12
grid.stop = 12
grid.step = 0.02
)";

constexpr std::string_view kFig5 = R"(# Combiner output lines at the measured pump power.
pump.power_mw = 63.0
pump.freq = 5.3
spurs.probe_freq = 2822
spurs.max_order = 2
spurs.table = 63 -48 -15
spurs.onset_mw = 5
grid.start = -12
grid.stop = 12
grid.step = 0.02
)";

constexpr std::string_view kFig6 = R"(# Two-photon intensity against rf frequency at fixed pump amplitude.
probe.rabi = 0.09
nv.t1 = 6000
nv.t2 = 1
pump.rabi = 1.508
curve.rf_start = 1.0
curve.rf_stop = 8.0
curve.rf_step = 0.25
bloch.k_max = 1
)";

// ---------------------------------------------------------------------------
// Output

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return std::get<std::string>(c);
}

std::string csv_field(const Cell& c) {
  std::string text = cell_text(c);
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return quoted + '"';
}

Json cell_json(const Cell& c) {
  return std::visit([](const auto& v) { return Json(v); }, c);
}

class Output {
 public:
  Output(std::string dir, bool json, std::ostream& log) : dir_(std::move(dir)), json_(json), log_(log) {}

  bool json() const { return json_; }

  void table(const std::string& stem, const Table& t) {
    if (json_) {
      Json arr = Json::array();
      for (const auto& row : t.rows) {
        Json obj;
        for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        arr.push_back(obj);
      }
      write(stem + ".json", arr.dump(2) + "\n");
      return;
    }
    std::string text;
    for (std::size_t i = 0; i < t.columns.size(); ++i) text += (i ? "," : "") + t.columns[i];
    text += '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + csv_field(row[i]);
      text += '\n';
    }
    write(stem + ".csv", text);
  }

  void spectrum(const std::string& stem, const Spectrum& s) {
    if (json_) {
      Json j;
      Json meta;
      for (const auto& [k, v] : s.meta) meta[k] = v;
      j["meta"] = meta;
      j["detuning_mhz"] = s.detuning;
      j["contrast"] = s.contrast;
      write(stem + ".json", j.dump(2) + "\n");
      return;
    }
    std::ostringstream text;
    write_spectrum_csv(text, s);
    write(stem + ".csv", text.str());
  }

  void fit(const std::string& stem, const FitResult& f) {
    if (json_) {
      write(stem + ".json", fit_to_json(f) + "\n");
      return;
    }
    std::ostringstream text;
    write_fit_csv(text, f);
    write(stem + ".csv", text.str());
  }

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir_, ec.message()));
    const auto path = std::filesystem::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    log_ << "wrote " << path.string() << '\n';
  }

 private:
  std::string dir_;
  bool json_;
  std::ostream& log_;
};

struct Context {
  RunConfig cfg;
  Output out;
  std::ostream& log;
};

// ---------------------------------------------------------------------------
// Commands

SynthInputs synth_inputs(const RunConfig& c, const DriveTone& pump) {
  return {c.nv, pump, c.probe.rabi, c.grid_points(), c.noise_sigma, c.seed, c.synth};
}

SweepFixed sweep_fixed(const RunConfig& c) {
  return {c.pump_power_mw, c.pump.freq, c.kappa, c.probe.rabi, c.noise_sigma, c.synth};
}

std::string signed_label(int m) { return m == 0 ? "0" : fmt::format("{:+d}", m); }

std::string label(const SpinLabel& s) { return fmt::format("|{},{}>", signed_label(s.ms), signed_label(s.mi)); }

void cmd_levels(Context& ctx) {
  const auto& p = ctx.cfg.nv;
  Table t{{"kind", "label", "value_mhz"}, {}};
  for (int ms : {1, 0, -1})
    for (int mi : {1, 0, -1}) t.rows.push_back({"energy", label({ms, mi}), energy_level(p, {ms, mi})});
  const auto esr = esr_frequencies(p);
  for (std::size_t i = 0; i < esr.size(); ++i) t.rows.push_back({"esr", fmt::format("esr{}", i), esr[i]});
  const auto nmr = nmr_lines(p);
  for (std::size_t i = 0; i < nmr.size(); ++i) t.rows.push_back({"nmr", fmt::format("nmr{}", i), nmr[i]});
  const auto tp = tpmr_positions(p, ctx.cfg.pump.freq);
  for (std::size_t i = 0; i < tp.size(); ++i) t.rows.push_back({"tpmr", fmt::format("tpmr{}", i), tp[i]});
  for (const auto& row : t.rows)
    ctx.log << fmt::format("{:<7} {:<9} {}\n", cell_text(row[0]), cell_text(row[1]), cell_text(row[2]));
  ctx.out.table("levels", t);
}

void cmd_synth(Context& ctx) {
  const Spectrum s = synth_spectrum(synth_inputs(ctx.cfg, ctx.cfg.pump));
  ctx.out.spectrum("synth", s);
}

Table fit_table(const std::vector<double>& values, const std::vector<FitResult>& fits, const char* value_name) {
  Table t{{value_name, "n_peaks", "converged", "dip", "center", "fwhm", "depth"}, {}};
  for (std::size_t i = 0; i < fits.size(); ++i)
    for (std::size_t d = 0; d < fits[i].dips.size(); ++d) {
      const auto& dip = fits[i].dips[d];
      t.rows.push_back({values[i], static_cast<long long>(fits[i].n_peaks), fits[i].converged,
                        static_cast<long long>(d), dip.center, dip.fwhm, dip.depth});
    }
  return t;
}

std::vector<FitResult> run_sweep(Context& ctx, SweepAxis axis, const std::vector<double>& values,
                                 const std::string& prefix) {
  const auto& c = ctx.cfg;
  const auto grid = c.grid_points();
  const auto spectra = sweep(c.nv, axis, values, sweep_fixed(c), grid, c.seed, c.jobs);
  std::vector<FitResult> fits(spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    ctx.out.spectrum(fmt::format("{}_{:02d}", prefix, i), spectra[i]);
    fits[i] = select_model(spectra[i], c.fit);
  }
  const char* name = axis == SweepAxis::pump_power ? "pump_power_mw" : "pump_freq_mhz";
  ctx.out.table(prefix + "_fits", fit_table(values, fits, name));
  for (std::size_t i = 0; i < fits.size(); ++i)
    ctx.log << fmt::format("{} = {}: {} dips{}\n", name, format_number(values[i]), fits[i].n_peaks,
                           fits[i].converged ? "" : " (not converged)");
  return fits;
}

void cmd_sweep(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto& values = c.sweep_axis == SweepAxis::pump_power ? c.sweep_powers : c.sweep_freqs;
  run_sweep(ctx, c.sweep_axis, values, "sweep");
}

void cmd_oracle(Context& ctx) {
  const auto& c = ctx.cfg;
  const double f0 = center_frequency(c.nv);
  std::vector<double> freqs = c.grid_points();
  for (double& f : freqs) f += f0;
  OdmrOptions opt;
  opt.frame = c.frame;
  opt.dt = c.oracle_dt;
  opt.pump_phase = c.pump_phase;
  opt.contrast_scale = c.synth.contrast_scale;
  opt.jobs = c.jobs;
  const Spectrum s = simulate_odmr(c.nv, c.sequence, freqs, c.detuning_samples, c.seed, opt);
  ctx.out.spectrum("oracle", s);
  const FitResult fit = select_model(s, c.fit);
  ctx.out.fit("oracle_fit", fit);
  ctx.log << fmt::format("oracle: {} points, {} dips selected\n", s.size(), fit.n_peaks);
}

void cmd_fit(Context& ctx, const std::string& input) {
  const Spectrum s = load_spectrum(input);
  const FitResult fit = select_model(s, ctx.cfg.fit);
  ctx.out.fit("fit", fit);
  ctx.log << fmt::format("{} dips, rss {}, converged {}\n", fit.n_peaks, format_number(fit.rss), fit.converged);
  for (const auto& d : fit.dips)
    ctx.log << fmt::format("  center {:9.4f}  fwhm {:.4f}  depth {:.3e}  t2* {:.3f} us\n", d.center, d.fwhm, d.depth,
                           extract_t2star(d));
  if (!fit.converged) throw NumericError("fit did not converge: " + fit.message);
}

std::vector<CurvePoint> run_curve(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto rf = make_grid(c.curve_rf_start, c.curve_rf_stop, c.curve_rf_step);
  const auto curve = tpmr_intensity_curve(DriveTone::probe(c.probe.rabi, c.probe.freq), c.pump.rabi, rf, c.nv.t1,
                                          c.nv.t2, c.k_max);
  Table t{{"omega_rf", "intensity", "valid"}, {}};
  for (const auto& pt : curve) t.rows.push_back({pt.omega_rf, pt.intensity, pt.valid});
  ctx.out.table("curve", t);
  return curve;
}

void cmd_curve(Context& ctx) { run_curve(ctx); }

SpurModel spur_model(const RunConfig& c) {
  SpurModel m = c.spur_model;
  m.pump_power_mw = c.pump_power_mw;
  for (auto& row : m.rows)
    for (double& db : row.db_by_order) db = std::min(0.0, db + c.spur_boost_db);
  return m;
}

void run_spurs(Context& ctx, const SpurModel& model, const std::string& stem) {
  const auto& c = ctx.cfg;
  const auto lines = spur_lines(c.spur_probe_freq, c.pump.freq, c.spur_max_order, model);
  Table t{{"n", "freq", "amplitude_db", "depth_ratio"}, {}};
  for (const auto& l : lines)
    t.rows.push_back({static_cast<long long>(l.n), l.freq, l.amplitude_db, spur_depth_ratio(l.amplitude_db)});
  ctx.out.table(stem + "_lines", t);
  ctx.out.spectrum(stem + "_spectrum", apply_spurs(synth_inputs(c, c.pump), lines));
  for (const auto& l : lines)
    ctx.log << fmt::format("n = {:+d}  {:.3f} MHz  {:6.1f} dB  depth ratio {:.2e}\n", l.n, l.freq, l.amplitude_db,
                           spur_depth_ratio(l.amplitude_db));
}

void cmd_spurs(Context& ctx) { run_spurs(ctx, spur_model(ctx.cfg), "spurs"); }

void cmd_validate(Context& ctx) {
  const auto& c = ctx.cfg;
  SidebandCheckOptions opt;
  opt.transition_rabi = c.validate_probe_rabi;
  opt.rf_freq = c.validate_rf;
  opt.scan_step = c.validate_step;
  opt.dt = c.oracle_dt;
  constexpr double kRabiTolerance = 0.05;
  Table t{{"z", "theory_rabi", "oracle_rabi", "rabi_error", "rabi_pass", "theory_center", "oracle_center",
           "resonance", "center_pass"},
          {}};
  std::vector<SidebandCheck> checks(c.validate_z.size());
  parallel_for(checks.size(), c.jobs, [&](std::size_t i) { checks[i] = sideband_check(c.nv, c.validate_z[i], opt); });
  for (const auto& r : checks) {
    const bool rabi_ok = r.rabi_error < kRabiTolerance;
    const bool center_ok = std::abs(r.oracle_center - r.theory_center) <= r.scan_step * (1 + 1e-9);
    t.rows.push_back({r.z, r.theory_rabi, r.oracle_rabi, r.rabi_error, rabi_ok, r.theory_center, r.oracle_center,
                      r.resonance, center_ok});
    ctx.log << fmt::format("z = {}: rabi {:.6f} vs {:.6f} MHz ({:.2f}%) {}; center {} vs {} MHz {}\n",
                           format_number(r.z), r.oracle_rabi, r.theory_rabi, 100 * r.rabi_error,
                           rabi_ok ? "PASS" : "FAIL", format_number(r.oracle_center),
                           format_number(r.theory_center), center_ok ? "PASS" : "FAIL");
  }
  ctx.out.table("validate", t);
}

void cmd_fig3(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto fits = run_sweep(ctx, SweepAxis::pump_power, c.sweep_powers, "fig3");
  Table t{{"pump_power_mw", "pump_rabi_mhz", "visibility", "visible", "n_peaks"}, {}};
  for (std::size_t i = 0; i < c.sweep_powers.size(); ++i) {
    const DriveTone pump = DriveTone::pump(power_to_rabi(c.sweep_powers[i], c.kappa), c.pump.freq);
    const double v = sideband_visibility(c.nv, pump, c.probe.rabi, c.synth);
    t.rows.push_back({c.sweep_powers[i], pump.rabi, v, v >= kVisibilityThreshold,
                      static_cast<long long>(fits[i].n_peaks)});
  }
  ctx.out.table("fig3_visibility", t);
}

void cmd_fig4(Context& ctx) {
  const auto& c = ctx.cfg;
  // (a) nine dips at the configured pump, (c) pump off.
  const Spectrum on = synth_spectrum(synth_inputs(c, c.pump));
  const Spectrum off = synth_spectrum(synth_inputs(c, DriveTone::pump(0.0, c.pump.freq)));
  ctx.out.spectrum("fig4a", on);
  ctx.out.spectrum("fig4c", off);
  const auto [lo, hi] = std::minmax_element(on.contrast.begin(), on.contrast.end());
  const auto peaks_on = detect_peaks(on, 0.05 * (*hi - *lo), c.fit.fwhm_guess);
  const FitResult fit_on = fit_gaussians(on, 9, peaks_on, c.fit);
  const FitResult fit_off = select_model(off, c.fit);
  ctx.out.fit("fig4a_fit", fit_on);
  ctx.out.fit("fig4c_fit", fit_off);

  // (b) splitting against pump frequency from the central manifold's sidebands.
  const auto fits = run_sweep(ctx, SweepAxis::pump_freq, c.sweep_freqs, "fig4b");
  std::vector<std::pair<double, double>> upper, lower;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const double f = c.sweep_freqs[i];
    upper.emplace_back(f, nearest_dip(fits[i], f).center);
    lower.emplace_back(f, nearest_dip(fits[i], -f).center);
  }
  const Regression up = splitting_regression(upper);
  const Regression down = splitting_regression(lower);
  ctx.out.table("fig4b_regression", {{"branch", "slope", "intercept", "r2"},
                                     {{"upper", up.slope, up.intercept, up.r2},
                                      {"lower", down.slope, down.intercept, down.r2}}});

  // Linewidths: central carrier (pump off) against its lower sideband.
  const GaussianDip carrier = nearest_dip(fit_off, 0.0);
  const GaussianDip sideband = nearest_dip(fit_on, -c.pump.freq);
  const double ratio = extract_t2star(sideband) / extract_t2star(carrier);
  ctx.out.table("fig4_linewidths", {{"line", "fwhm_mhz", "t2_star_us"},
                                    {{"carrier", carrier.fwhm, extract_t2star(carrier)},
                                     {"sideband", sideband.fwhm, extract_t2star(sideband)},
                                     {"ratio", std::string(""), ratio}}});
  ctx.log << fmt::format("slopes {:.4f} / {:.4f}; t2* carrier {:.3f} us, sideband {:.3f} us, ratio {:.2f}\n",
                         up.slope, down.slope, extract_t2star(carrier), extract_t2star(sideband), ratio);
}

void cmd_fig5(Context& ctx) {
  run_spurs(ctx, spur_model(ctx.cfg), "fig5");
  RunConfig boosted = ctx.cfg;
  boosted.spur_boost_db = 1000.0;  // every spur at 0 dB
  run_spurs(ctx, spur_model(boosted), "fig5_boosted");
}

void cmd_fig6(Context& ctx) {
  const auto curve = run_curve(ctx);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i - 1].valid && curve[i].valid && !(curve[i].intensity < curve[i - 1].intensity)) monotone = false;
  ctx.log << fmt::format("{} points, decreasing over the valid range: {}\n", curve.size(), monotone);
}

// ---------------------------------------------------------------------------
// Dispatch

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;
  std::string format = "csv";
  std::string input;
};

RunConfig build_config(const std::string& command, const Flags& flags) {
  std::vector<ConfigLayer> layers;
  const std::string_view preset = preset_text(command);
  if (!preset.empty()) layers.push_back({preset, command + " preset"});
  std::string user;
  if (!flags.config.empty()) {
    user = read_config_file(flags.config);
    layers.push_back({user, flags.config});
  }
  RunConfig cfg = parse_config_layers(layers, process_env);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.jobs) {
    if (*flags.jobs < 1) throw UsageError("--jobs must be >= 1");
    cfg.jobs = *flags.jobs;
  }
  if (flags.out) cfg.out_dir = *flags.out;
  return cfg;
}

int exit_for(const std::exception& e, std::ostream& err, int code) {
  err << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

std::string_view preset_text(std::string_view command) {
  if (command == "fig3") return kFig3;
  if (command == "fig4") return kFig4;
  if (command == "fig5-spurs") return kFig5;
  if (command == "fig6") return kFig6;
  return {};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-photon magnetic resonance toolkit for a single NV centre"};
  app.require_subcommand(1, 1);
  Flags flags;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned jobs = 0;
  app.add_option("--config", flags.config, "config file (section.key = value)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads");
  app.add_option("--format", flags.format, "output format")->check(CLI::IsMember({"csv", "json"}));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"levels", "energy levels and line positions"},
      {"synth", "fast synthetic ODMR spectrum"},
      {"sweep", "pump power or frequency sweep with fits"},
      {"oracle", "ODMR spectrum from density-matrix dynamics"},
      {"fit", "fit 3 or 9 Gaussian dips to a spectrum file"},
      {"tpmr-curve", "two-photon intensity against rf frequency"},
      {"spurs", "combiner spur lines and their dips"},
      {"validate", "oracle against effective theory for the k = 1 sideband"},
      {"fig3", "preset: pump-power series"},
      {"fig4", "preset: nine dips, splitting law, linewidths"},
      {"fig5-spurs", "preset: measured combiner spurs"},
      {"fig6", "preset: intensity against rf frequency"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) subs[name] = app.add_subcommand(name, help)->fallthrough();
  subs["fit"]->add_option("input", flags.input, "spectrum CSV")->required();
  std::string axis;
  subs["sweep"]->add_option("--axis", axis, "pump_power or pump_freq")
      ->check(CLI::IsMember({"pump_power", "pump_freq"}));

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (*seed_opt) flags.seed = seed;
  if (*out_opt) flags.out = out_dir;
  if (*jobs_opt) flags.jobs = jobs;

  const std::string command = app.get_subcommands().front()->get_name();
  auto previous = log::set_warning_sink([&](const std::string& msg) { err << "warning: " << msg << '\n'; });
  int code = kExitOk;
  try {
    RunConfig cfg = build_config(command, flags);
    if (!axis.empty()) cfg.sweep_axis = axis == "pump_power" ? SweepAxis::pump_power : SweepAxis::pump_freq;
    Context ctx{cfg, Output(cfg.out_dir, flags.format == "json", out), out};
    if (command == "levels") cmd_levels(ctx);
    else if (command == "synth") cmd_synth(ctx);
    else if (command == "sweep") cmd_sweep(ctx);
    else if (command == "oracle") cmd_oracle(ctx);
    else if (command == "fit") cmd_fit(ctx, flags.input);
    else if (command == "tpmr-curve") cmd_curve(ctx);
    else if (command == "spurs") cmd_spurs(ctx);
    else if (command == "validate") cmd_validate(ctx);
    else if (command == "fig3") cmd_fig3(ctx);
    else if (command == "fig4") cmd_fig4(ctx);
    else if (command == "fig5-spurs") cmd_fig5(ctx);
    else if (command == "fig6") cmd_fig6(ctx);
  } catch (const UsageError& e) {
    code = exit_for(e, err, kExitUsage);
  } catch (const ConfigError& e) {
    code = exit_for(e, err, kExitConfig);
  } catch (const NumericError& e) {
    code = exit_for(e, err, kExitNumeric);
  } catch (const IoError& e) {
    code = exit_for(e, err, kExitIo);
  } catch (const std::invalid_argument& e) {
    code = exit_for(e, err, kExitConfig);
  } catch (const std::domain_error& e) {
    code = exit_for(e, err, kExitConfig);
  } catch (const std::out_of_range& e) {
    code = exit_for(e, err, kExitConfig);
  } catch (const std::exception& e) {
    code = exit_for(e, err, kExitUsage);
  }
  log::set_warning_sink(previous);
  return code;
}

}  // namespace tpmr
