#include "tpmr/spectrum.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "tpmr/errors.hpp"

namespace tpmr {

std::string format_number(double v) { return fmt::format("{}", v); }

void Spectrum::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

void Spectrum::set_meta(const std::string& key, double value) { set_meta(key, format_number(value)); }

std::optional<std::string> Spectrum::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<double> Spectrum::meta_number(const std::string& key) const {
  const auto v = meta_value(key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) return std::nullopt;
    return d;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void Spectrum::validate() const {
  if (detuning.size() != contrast.size())
    throw std::invalid_argument("spectrum: grid and contrast lengths differ");
  for (std::size_t i = 0; i < detuning.size(); ++i) {
    if (!std::isfinite(detuning[i]) || !std::isfinite(contrast[i]))
      throw std::invalid_argument(fmt::format("spectrum: non-finite value at row {}", i));
    if (i > 0 && !(detuning[i] > detuning[i - 1]))
      throw std::invalid_argument(fmt::format("spectrum: grid not strictly ascending at row {}", i));
  }
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  for (const auto& [k, v] : s.meta) out << "# " << k << '=' << v << '\n';
  out << "detuning_mhz,contrast\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << format_number(s.detuning[i]) << ',' << format_number(s.contrast[i]) << '\n';
}

Spectrum read_spectrum_csv(std::istream& in) {
  Spectrum s;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq != std::string::npos) s.set_meta(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      if (line != "detuning_mhz,contrast")
        throw IoError(fmt::format("spectrum line {}: expected header 'detuning_mhz,contrast'", lineno));
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError(fmt::format("spectrum line {}: expected two columns", lineno));
    try {
      s.detuning.push_back(std::stod(line.substr(0, comma)));
      s.contrast.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw IoError(fmt::format("spectrum line {}: malformed number", lineno));
    }
  }
  if (!header_seen) throw IoError("spectrum: missing header");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
  return s;
}

void save_spectrum(const std::string& path, const Spectrum& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_spectrum_csv(out, s);
  if (!out) throw IoError("write failed: " + path);
}

Spectrum load_spectrum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return read_spectrum_csv(in);
}

std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0)) throw std::invalid_argument("grid.step must be > 0");
  if (!(start < stop)) throw std::invalid_argument("grid.start must be < grid.stop");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-6)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start + static_cast<double>(i) * step;
  return g;
}

}  // namespace tpmr
