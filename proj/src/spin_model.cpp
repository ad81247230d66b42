#include "tpmr/spin_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tpmr {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("nv.") + field + ": " + what);
}

}  // namespace

void NvParams::validate() const {
  require(std::isfinite(d_gs) && d_gs > 0, "d_gs", "must be > 0");
  require(std::isfinite(zeeman) && zeeman >= 0, "zeeman", "must be >= 0");
  require(zeeman < d_gs, "zeeman", "must be below d_gs (low-field regime)");
  require(std::isfinite(a_hf), "a_hf", "must be finite");
  require(std::isfinite(q_quad), "q_quad", "must be finite");
  require(std::isfinite(t2) && t2 > 0, "t2", "must be > 0");
  require(std::isfinite(t1) && t1 >= t2, "t1", "must be >= t2");
  require(std::isfinite(t2_star) && t2_star > 0, "t2_star", "must be > 0");
}

SpinLabel SpinLabel::make(int ms, int mi) {
  SpinLabel s{ms, mi};
  if (!s.valid()) throw std::invalid_argument("spin label out of range");
  return s;
}

double energy_level(const NvParams& p, SpinLabel s) {
  const double ms = s.ms;
  const double mi = s.mi;
  return p.d_gs * ms * ms + p.zeeman * ms + p.a_hf * ms * mi + p.q_quad * mi * mi;
}

double center_frequency(const NvParams& p) { return p.d_gs - p.zeeman; }

std::array<double, 3> esr_frequencies(const NvParams& p) {
  const double f0 = center_frequency(p);
  std::array<double, 3> f{f0 - p.a_hf, f0, f0 + p.a_hf};
  std::sort(f.begin(), f.end());
  return f;
}

std::array<double, 4> nmr_lines(const NvParams& p) {
  const double f0 = center_frequency(p);
  const double f_plus = f0 + p.a_hf;
  const double f_minus = f0 - p.a_hf;
  const double a = p.a_hf;
  const double q = p.q_quad;
  return {f0 - q - a, f0 - q + a, f_plus + q - a, f_minus + q + a};
}

bool transition_allowed(SpinLabel from, SpinLabel to, TransitionKind kind) {
  if (!from.valid() || !to.valid()) return false;
  const int dms = std::abs(from.ms - to.ms);
  const int dmi = std::abs(from.mi - to.mi);
  switch (kind) {
    case TransitionKind::esr:
      return dms == 1 && dmi == 0;
    case TransitionKind::nmr:
      return dms == 0 && dmi == 1;
  }
  return false;
}

std::array<double, 6> tpmr_positions(const NvParams& p, double f_pump) {
  if (!(f_pump >= 0)) throw std::invalid_argument("f_pump must be >= 0");
  const auto carriers = esr_frequencies(p);
  std::array<double, 6> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    out[2 * i] = carriers[i] - f_pump;
    out[2 * i + 1] = carriers[i] + f_pump;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tpmr
