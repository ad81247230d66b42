#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tpmr {

/// PL contrast dPL/PL sampled on a probe-detuning grid (MHz relative to the
/// central carrier f0). `meta` keeps insertion order so files are stable.
struct Spectrum {
  std::vector<double> detuning;
  std::vector<double> contrast;
  std::vector<std::pair<std::string, std::string>> meta;

  std::size_t size() const { return detuning.size(); }

  void set_meta(const std::string& key, const std::string& value);
  void set_meta(const std::string& key, double value);
  std::optional<std::string> meta_value(const std::string& key) const;
  std::optional<double> meta_number(const std::string& key) const;

  /// Strictly ascending grid, finite contrast, equal lengths. Throws
  /// std::invalid_argument otherwise.
  void validate() const;
};

/// `# key=value` header lines, then `detuning_mhz,contrast` rows.
void write_spectrum_csv(std::ostream& out, const Spectrum& s);
Spectrum read_spectrum_csv(std::istream& in);

void save_spectrum(const std::string& path, const Spectrum& s);
Spectrum load_spectrum(const std::string& path);

/// start, start + step, ... up to stop inclusive (within step/1e6).
std::vector<double> make_grid(double start, double stop, double step);

/// Shortest round-trippable text for a double; used by every writer.
std::string format_number(double v);

}  // namespace tpmr
