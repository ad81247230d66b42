#include "tpmr/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "tpmr/errors.hpp"

namespace tpmr {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_seed(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(item));
  return out;
}

std::optional<double> to_optional(const std::string& v) {
  if (v == "random" || v == "none" || v.empty()) return std::nullopt;
  return to_double(v);
}

// "63 -48 -15, 100 -40 -12": power followed by dB per order.
std::vector<SpurRow> to_table(const std::string& v) {
  std::vector<SpurRow> rows;
  for (const auto& row : split(v, ',')) {
    std::stringstream in(row);
    std::string tok;
    SpurRow r;
    bool first = true;
    while (in >> tok) {
      if (first) r.power_mw = to_double(tok);
      else r.db_by_order.push_back(to_double(tok));
      first = false;
    }
    if (first) throw std::invalid_argument("empty spur table row");
    rows.push_back(r);
  }
  return rows;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& key_table() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"nv.d_gs", [](RunConfig& c, const std::string& v) { c.nv.d_gs = to_double(v); }},
      {"nv.zeeman", [](RunConfig& c, const std::string& v) { c.nv.zeeman = to_double(v); }},
      {"nv.b0", [](RunConfig& c, const std::string& v) { c.b0 = to_optional(v); }},
      {"nv.gamma_e", [](RunConfig& c, const std::string& v) { c.gamma_e = to_double(v); }},
      {"nv.a_hf", [](RunConfig& c, const std::string& v) { c.nv.a_hf = to_double(v); }},
      {"nv.q_quad", [](RunConfig& c, const std::string& v) { c.nv.q_quad = to_double(v); }},
      {"nv.t1", [](RunConfig& c, const std::string& v) { c.nv.t1 = to_double(v); }},
      {"nv.t2", [](RunConfig& c, const std::string& v) { c.nv.t2 = to_double(v); }},
      {"nv.t2_star", [](RunConfig& c, const std::string& v) { c.nv.t2_star = to_double(v); }},
      {"probe.rabi", [](RunConfig& c, const std::string& v) { c.probe.rabi = to_double(v); }},
      {"probe.freq", [](RunConfig& c, const std::string& v) { c.probe.freq = to_double(v); }},
      {"pump.power_mw", [](RunConfig& c, const std::string& v) { c.pump_power_mw = to_double(v); }},
      {"pump.freq", [](RunConfig& c, const std::string& v) { c.pump.freq = to_double(v); }},
      {"pump.rabi", [](RunConfig& c, const std::string& v) { c.pump_rabi = to_optional(v); }},
      {"sequence.probe_duration", [](RunConfig& c, const std::string& v) { c.sequence.probe_duration = to_double(v); }},
      {"sequence.laser_duration", [](RunConfig& c, const std::string& v) { c.sequence.laser_duration = to_double(v); }},
      {"sequence.pump_phase", [](RunConfig& c, const std::string& v) { c.pump_phase = to_optional(v); }},
      {"sequence.calibrate_pi", [](RunConfig& c, const std::string& v) { c.calibrate_pi = to_bool(v); }},
      {"grid.start", [](RunConfig& c, const std::string& v) { c.grid.start = to_double(v); }},
      {"grid.stop", [](RunConfig& c, const std::string& v) { c.grid.stop = to_double(v); }},
      {"grid.step", [](RunConfig& c, const std::string& v) { c.grid.step = to_double(v); }},
      {"run.seed", [](RunConfig& c, const std::string& v) { c.seed = to_seed(v); }},
      {"run.out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"run.jobs", [](RunConfig& c, const std::string& v) { c.jobs = static_cast<unsigned>(to_int(v)); }},
      {"synth.kappa", [](RunConfig& c, const std::string& v) { c.kappa = to_double(v); }},
      {"synth.contrast_scale", [](RunConfig& c, const std::string& v) { c.synth.contrast_scale = to_double(v); }},
      {"synth.width_ratio", [](RunConfig& c, const std::string& v) { c.synth.width_ratio = to_double(v); }},
      {"synth.cycle_time", [](RunConfig& c, const std::string& v) { c.synth.cycle_time = to_double(v); }},
      {"synth.noise_sigma", [](RunConfig& c, const std::string& v) { c.noise_sigma = to_double(v); }},
      {"bloch.k_max", [](RunConfig& c, const std::string& v) { c.k_max = static_cast<int>(to_int(v)); }},
      {"oracle.detuning_samples", [](RunConfig& c, const std::string& v) { c.detuning_samples = static_cast<int>(to_int(v)); }},
      {"oracle.dt", [](RunConfig& c, const std::string& v) { c.oracle_dt = to_double(v); }},
      {"oracle.frame",
       [](RunConfig& c, const std::string& v) {
         if (v == "rotating") c.frame = Frame::rotating;
         else if (v == "lab") c.frame = Frame::lab;
         else throw std::invalid_argument("expected rotating or lab, got '" + v + "'");
       }},
      {"sweep.axis",
       [](RunConfig& c, const std::string& v) {
         if (v == "pump_power") c.sweep_axis = SweepAxis::pump_power;
         else if (v == "pump_freq") c.sweep_axis = SweepAxis::pump_freq;
         else throw std::invalid_argument("expected pump_power or pump_freq, got '" + v + "'");
       }},
      {"sweep.powers", [](RunConfig& c, const std::string& v) { c.sweep_powers = to_list(v); }},
      {"sweep.freqs", [](RunConfig& c, const std::string& v) { c.sweep_freqs = to_list(v); }},
      {"spurs.max_order", [](RunConfig& c, const std::string& v) { c.spur_max_order = static_cast<int>(to_int(v)); }},
      {"spurs.probe_freq", [](RunConfig& c, const std::string& v) { c.spur_probe_freq = to_double(v); }},
      {"spurs.onset_mw", [](RunConfig& c, const std::string& v) { c.spur_model.onset_mw = to_double(v); }},
      {"spurs.table", [](RunConfig& c, const std::string& v) { c.spur_model.rows = to_table(v); }},
      {"spurs.boost_db", [](RunConfig& c, const std::string& v) { c.spur_boost_db = to_double(v); }},
      {"curve.rf_start", [](RunConfig& c, const std::string& v) { c.curve_rf_start = to_double(v); }},
      {"curve.rf_stop", [](RunConfig& c, const std::string& v) { c.curve_rf_stop = to_double(v); }},
      {"curve.rf_step", [](RunConfig& c, const std::string& v) { c.curve_rf_step = to_double(v); }},
      {"validate.z_values", [](RunConfig& c, const std::string& v) { c.validate_z = to_list(v); }},
      {"validate.rf_freq", [](RunConfig& c, const std::string& v) { c.validate_rf = to_double(v); }},
      {"validate.probe_rabi", [](RunConfig& c, const std::string& v) { c.validate_probe_rabi = to_double(v); }},
      {"validate.scan_step", [](RunConfig& c, const std::string& v) { c.validate_step = to_double(v); }},
      {"fit.resolution", [](RunConfig& c, const std::string& v) { c.fit.resolution = to_double(v); }},
      {"fit.fwhm_guess", [](RunConfig& c, const std::string& v) { c.fit.fwhm_guess = to_double(v); }},
      {"fit.prominence", [](RunConfig& c, const std::string& v) { c.fit.prominence = to_double(v); }},
      {"fit.max_iterations", [](RunConfig& c, const std::string& v) { c.fit.max_iterations = static_cast<int>(to_int(v)); }},
      {"fit.rel_tol", [](RunConfig& c, const std::string& v) { c.fit.rel_tol = to_double(v); }},
  };
  return table;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
  const auto& table = key_table();
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
  if (it == table.end()) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  try {
    it->second(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}: {}", where, key, e.what()));
  }
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(fmt::format("{}: {}", key, what));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& e : key_table()) out.push_back(e.first);
    return out;
  }();
  return keys;
}

std::string env_name(const std::string& key) {
  std::string out = "TPMR_";
  for (char ch : key) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

DriveTone RunConfig::pump_tone() const {
  return DriveTone::pump(pump_rabi ? *pump_rabi : power_to_rabi(pump_power_mw, kappa), pump.freq);
}

DriveTone RunConfig::oracle_probe() const {
  const double rabi = calibrate_pi ? pi_pulse_rabi(sequence.probe_duration) : probe.rabi / std::sqrt(2.0);
  return DriveTone::probe(rabi, probe.freq);
}

std::vector<double> RunConfig::grid_points() const { return make_grid(grid.start, grid.stop, grid.step); }

void RunConfig::validate() const {
  try {
    nv.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(!b0 || (std::isfinite(*b0) && *b0 >= 0), "nv.b0", "must be >= 0");
  require(std::isfinite(gamma_e) && gamma_e > 0, "nv.gamma_e", "must be > 0");
  require(std::isfinite(probe.rabi) && probe.rabi > 0, "probe.rabi", "must be > 0");
  require(std::isfinite(probe.freq) && probe.freq > 0, "probe.freq", "must be > 0");
  require(std::isfinite(pump.freq) && pump.freq > 0, "pump.freq", "must be > 0");
  require(std::isfinite(pump_power_mw) && pump_power_mw >= 0, "pump.power_mw", "must be >= 0");
  require(!pump_rabi || (std::isfinite(*pump_rabi) && *pump_rabi >= 0), "pump.rabi", "must be >= 0");
  require(std::isfinite(sequence.probe_duration) && sequence.probe_duration > 0, "sequence.probe_duration",
          "must be > 0");
  require(std::isfinite(sequence.laser_duration) && sequence.laser_duration >= 0, "sequence.laser_duration",
          "must be >= 0");
  require(!pump_phase || std::isfinite(*pump_phase), "sequence.pump_phase", "must be finite");
  require(std::isfinite(grid.step) && grid.step > 0, "grid.step", "must be > 0");
  require(std::isfinite(grid.start) && std::isfinite(grid.stop) && grid.start < grid.stop, "grid.start",
          "must be below grid.stop");
  require((grid.stop - grid.start) / grid.step < 1e6, "grid.step", "too many grid points");
  require(jobs >= 1, "run.jobs", "must be >= 1");
  require(!out_dir.empty(), "run.out", "must not be empty");
  require(std::isfinite(kappa) && kappa > 0, "synth.kappa", "must be > 0");
  require(std::isfinite(synth.contrast_scale) && synth.contrast_scale > 0, "synth.contrast_scale", "must be > 0");
  require(std::isfinite(synth.width_ratio) && synth.width_ratio > 0, "synth.width_ratio", "must be > 0");
  require(std::isfinite(synth.cycle_time) && synth.cycle_time > 0, "synth.cycle_time", "must be > 0");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0, "synth.noise_sigma", "must be >= 0");
  require(k_max >= 0 && k_max <= kDefaultMaxOrder, "bloch.k_max", "must be in [0, 3]");
  require(detuning_samples >= 1 && detuning_samples <= 256, "oracle.detuning_samples", "must be in [1, 256]");
  require(std::isfinite(oracle_dt) && oracle_dt >= 0, "oracle.dt", "must be >= 0 (0 = automatic)");
  require(!sweep_powers.empty(), "sweep.powers", "must not be empty");
  require(std::all_of(sweep_powers.begin(), sweep_powers.end(), [](double v) { return std::isfinite(v) && v >= 0; }),
          "sweep.powers", "must be >= 0");
  require(!sweep_freqs.empty(), "sweep.freqs", "must not be empty");
  require(std::all_of(sweep_freqs.begin(), sweep_freqs.end(), [](double v) { return std::isfinite(v) && v > 0; }),
          "sweep.freqs", "must be > 0");
  require(spur_max_order >= 0, "spurs.max_order", "must be >= 0");
  require(std::isfinite(spur_probe_freq) && spur_probe_freq > 0, "spurs.probe_freq", "must be > 0");
  require(std::isfinite(spur_model.onset_mw) && spur_model.onset_mw >= 0, "spurs.onset_mw", "must be >= 0");
  for (std::size_t i = 0; i < spur_model.rows.size(); ++i) {
    const auto& row = spur_model.rows[i];
    require(row.power_mw > 0, "spurs.table", "powers must be > 0");
    require(i == 0 || row.power_mw > spur_model.rows[i - 1].power_mw, "spurs.table", "powers must ascend");
    for (double db : row.db_by_order) require(db <= 0, "spurs.table", "amplitudes must be <= 0 dB");
  }
  require(std::isfinite(spur_boost_db), "spurs.boost_db", "must be finite");
  require(curve_rf_start > 0, "curve.rf_start", "must be > 0");
  require(curve_rf_stop > curve_rf_start, "curve.rf_stop", "must exceed curve.rf_start");
  require(curve_rf_step > 0, "curve.rf_step", "must be > 0");
  require(!validate_z.empty(), "validate.z_values", "must not be empty");
  require(std::all_of(validate_z.begin(), validate_z.end(), [](double z) { return z > 0 && z < 1.8; }),
          "validate.z_values", "must be in (0, 1.8)");
  require(validate_rf > 0, "validate.rf_freq", "must be > 0");
  require(validate_step > 0, "validate.scan_step", "must be > 0");
  require(validate_probe_rabi > 0, "validate.probe_rabi", "must be > 0");
  require(fit.resolution >= 0, "fit.resolution", "must be >= 0");
  require(fit.fwhm_guess > 0, "fit.fwhm_guess", "must be > 0");
  require(fit.max_iterations >= 1, "fit.max_iterations", "must be >= 1");
  require(fit.rel_tol > 0, "fit.rel_tol", "must be > 0");
}

namespace {

void apply_text(RunConfig& cfg, std::string_view text, const std::string& source) {
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source.empty() ? fmt::format("line {}", line_no) : fmt::format("{}:{}", source, line_no);
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos) throw ConfigError(fmt::format("{}: key '{}' lacks a section", where, key));
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError(fmt::format("{}: '{}' already set on line {}", where, key, it->second));
    apply(cfg, key, value, where);
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, const EnvLookup& env) {
  const std::vector<ConfigLayer> layers{{text, ""}};
  return parse_config_layers(layers, env);
}

RunConfig parse_config_layers(std::span<const ConfigLayer> layers, const EnvLookup& env) {
  RunConfig cfg;
  for (const auto& layer : layers) apply_text(cfg, layer.text, layer.source);
  if (env) {
    for (const auto& key : config_keys())
      if (auto value = env(env_name(key))) apply(cfg, key, trim(*value), env_name(key));
  }
  if (cfg.b0) cfg.nv.zeeman = *cfg.b0 * cfg.gamma_e;
  cfg.validate();
  cfg.pump = cfg.pump_tone();
  cfg.sequence.probe_tone = cfg.oracle_probe();
  cfg.sequence.pump_tone = cfg.pump;
  return cfg;
}

std::string read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

RunConfig load_config(const std::string& path) {
  const std::string text = read_config_file(path);
  const std::vector<ConfigLayer> layers{{text, path}};
  return parse_config_layers(layers, process_env);
}

}  // namespace tpmr
