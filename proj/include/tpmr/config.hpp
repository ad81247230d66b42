#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpmr/dynamics.hpp"
#include "tpmr/fitting.hpp"
#include "tpmr/synth.hpp"

namespace tpmr {

struct GridSpec {
  double start = -10.0;  ///< MHz from f0
  double stop = 10.0;
  double step = 0.02;
};

struct RunConfig {
  NvParams nv;
  double gamma_e = 28.0;                 ///< MHz/mT, used when b0 is given
  std::optional<double> b0;              ///< mT; overrides nv.zeeman
  DriveTone probe = DriveTone::probe(0.09, 2870.0 - 42.0);
  DriveTone pump = DriveTone::pump(0.0, 5.3);
  double pump_power_mw = 63.0;
  std::optional<double> pump_rabi;       ///< MHz; overrides power * kappa
  PulseSequence sequence;
  std::optional<double> pump_phase;      ///< rad; unset averages over phase
  bool calibrate_pi = true;              ///< oracle probe amplitude from the pi-pulse condition
  GridSpec grid;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  unsigned jobs = 1;

  double kappa = kDefaultKappa;
  double noise_sigma = 0.0;
  SynthSettings synth;
  int k_max = 1;

  int detuning_samples = 32;
  double oracle_dt = 0.0;
  Frame frame = Frame::rotating;

  SweepAxis sweep_axis = SweepAxis::pump_power;
  std::vector<double> sweep_powers{0.63, 2.00, 10.0, 31.6, 63.0};
  std::vector<double> sweep_freqs{3.0, 4.0, 5.0, 6.0, 7.0, 8.0};

  int spur_max_order = 2;
  double spur_probe_freq = 2822.0;
  double spur_boost_db = 0.0;            ///< added to every table entry (sanity inversion)
  SpurModel spur_model = SpurModel::measured();

  double curve_rf_start = 1.0;
  double curve_rf_stop = 8.0;
  double curve_rf_step = 0.25;

  std::vector<double> validate_z{0.1, 0.2, 0.3};
  double validate_rf = 5.3;
  double validate_step = 0.01;           ///< MHz, sideband-centre scan resolution
  double validate_probe_rabi = 0.2;      ///< MHz, transition Rabi of the check

  FitOptions fit;

  /// Pump tone after applying power, kappa and any explicit amplitude.
  DriveTone pump_tone() const;
  /// Probe tone handed to the oracle, amplitude per calibrate_pi.
  DriveTone oracle_probe() const;
  std::vector<double> grid_points() const;
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Parses `section.key = value` lines (# comments, blank lines allowed,
/// lists comma separated). Unknown keys and malformed lines raise ConfigError
/// with the line number. `env`, when given, is queried for TPMR_SECTION_KEY
/// overrides of every key after the text is applied.
RunConfig parse_config(std::string_view text, const EnvLookup& env = {});

/// One block of config text; `source` prefixes error locations.
struct ConfigLayer {
  std::string_view text;
  std::string source;
};

/// Layers applied in order, later ones overriding earlier keys; a key may
/// appear only once per layer.
RunConfig parse_config_layers(std::span<const ConfigLayer> layers, const EnvLookup& env = {});

std::string read_config_file(const std::string& path);
std::optional<std::string> process_env(const std::string& name);

/// Reads the file (IoError if unreadable) and parses it with process
/// environment overrides.
RunConfig load_config(const std::string& path);

/// Every accepted key in documentation order.
const std::vector<std::string>& config_keys();

/// Environment variable consulted for a key: pump.freq -> TPMR_PUMP_FREQ.
std::string env_name(const std::string& key);

}  // namespace tpmr
