#include "tpmr/bloch.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "tpmr/errors.hpp"
#include "tpmr/log.hpp"
#include "tpmr/units.hpp"

namespace tpmr {

namespace {

void require_times(double t1, double t2) {
  if (!(t2 > 0) || !(t1 > 0)) throw std::invalid_argument("bloch: t1 and t2 must be > 0");
}

// d sigma/dt = A sigma + b for H = Omega Sz + w1 Sx with T1/T2 relaxation
// towards (0, 0, -1).
struct AffineBloch {
  Eigen::Matrix3d a;
  Eigen::Vector3d b;
};

AffineBloch bloch_system(double offset, double rabi, double t1, double t2) {
  const double w = angular(offset);
  const double w1 = angular(rabi);
  AffineBloch sys;
  sys.a << -1.0 / t2, -w, 0.0,
            w, -1.0 / t2, w1,
            0.0, -w1, -1.0 / t1;
  sys.b << 0.0, 0.0, -1.0 / t1;
  return sys;
}

}  // namespace

double steady_state_absorption(double offset, double rabi, double t1, double t2) {
  require_times(t1, t2);
  const double w = angular(offset);
  const double w1 = angular(rabi);
  return -w1 * t2 / ((1.0 + w1 * w1 * t1 * t2) + w * w * t2 * t2);
}

BlochSteadyState bloch_steady_state_oracle(double offset, double rabi, double t1, double t2) {
  require_times(t1, t2);
  const AffineBloch sys = bloch_system(offset, rabi, t1, t2);

  BlochSteadyState out;
  out.linear_solve.sigma = sys.a.fullPivLu().solve(-sys.b);

  // Augmented generator [[A, b], [0, 0]] so exp(G t) propagates the affine
  // system exactly; square it until the state stops moving.
  Eigen::Matrix4d gen = Eigen::Matrix4d::Zero();
  gen.topLeftCorner<3, 3>() = sys.a;
  gen.topRightCorner<3, 1>() = sys.b;
  double h = 0.1 * std::min(t2, 1.0 / (1.0 + std::hypot(angular(offset), angular(rabi))));
  Eigen::Matrix4d step = (gen * h).exp();
  Eigen::Vector4d start(0.0, 0.0, -1.0, 1.0);
  Eigen::Vector3d prev = (step * start).head<3>();
  constexpr int kMaxDoublings = 90;
  constexpr double kSettle = 1e-14;
  int settled = 0;
  for (int i = 1; i <= kMaxDoublings; ++i) {
    step = step * step;
    h *= 2.0;
    const Eigen::Vector3d cur = (step * start).head<3>();
    const double delta = (cur - prev).norm();
    prev = cur;
    out.doublings = i;
    out.horizon = h;
    // Require a few quiet doublings past the slowest decay time.
    if (delta < kSettle && h > 50.0 * t1) {
      if (++settled >= 3) break;
    } else {
      settled = 0;
    }
  }
  out.integrated.sigma = prev;
  if (settled < 3)
    throw NumericError(fmt::format("bloch oracle: integration did not settle after {} doublings (t = {} us)",
                                   out.doublings, out.horizon));
  const double gap = (out.integrated.sigma - out.linear_solve.sigma).norm();
  if (gap > 1e-9)
    throw NumericError(fmt::format("bloch oracle: routes disagree by {:.3e} (offset={}, rabi={}, t1={}, t2={})",
                                   gap, offset, rabi, t1, t2));
  return out;
}

double lorentzian_sum(double offset, double rabi, double rf_freq, double t1, double t2,
                      std::span<const OrderWeight> weights) {
  require_times(t1, t2);
  const double w = angular(offset);
  const double w1 = angular(rabi);
  const double wrf = angular(rf_freq);
  double total = 0.0;
  for (const auto& [k, j] : weights) {
    const double j2 = j * j;
    const double det = w - k * wrf;
    total += w1 * t2 * j2 / (1.0 + w1 * w1 * j2 * t1 * t2 + det * det * t2 * t2);
  }
  return total;
}

double multiphoton_term(int k, double offset, const DriveTone& probe, const DriveTone& pump, double t1,
                        double t2) {
  if (!(pump.freq > 0)) throw std::invalid_argument("pump.freq must be > 0");
  const OrderWeight w{k, bessel_j(k, modulation_index(pump))};
  return lorentzian_sum(offset, probe.rabi, pump.freq, t1, t2, std::span(&w, 1));
}

double multiphoton_absorption(double offset, const DriveTone& probe, const DriveTone& pump, double t1,
                              double t2, int k_max) {
  if (!(pump.freq > 0)) throw std::invalid_argument("pump.freq must be > 0");
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  const double z = modulation_index(pump);
  std::vector<OrderWeight> weights;
  weights.reserve(2 * k_max + 1);
  for (int k = -k_max; k <= k_max; ++k) weights.push_back({k, bessel_j(k, z)});
  return lorentzian_sum(offset, probe.rabi, pump.freq, t1, t2, weights);
}

std::vector<CurvePoint> tpmr_intensity_curve(const DriveTone& probe, double pump_rabi,
                                             std::span<const double> rf_grid, double t1, double t2,
                                             int k_max) {
  for (std::size_t i = 0; i < rf_grid.size(); ++i) {
    if (!(rf_grid[i] > 0)) throw std::invalid_argument("rf grid must be strictly positive");
    if (i > 0 && !(rf_grid[i] > rf_grid[i - 1])) throw std::invalid_argument("rf grid must be ascending");
  }
  std::vector<CurvePoint> curve;
  curve.reserve(rf_grid.size());
  std::size_t flagged = 0;
  for (const double f : rf_grid) {
    const DriveTone pump = DriveTone::pump(pump_rabi, f);
    CurvePoint pt{f, multiphoton_absorption(f, probe, pump, t1, t2, k_max), f >= kTheoryValidityRf};
    if (!pt.valid) ++flagged;
    curve.push_back(pt);
  }
  if (flagged > 0)
    log::warn(fmt::format("tpmr curve: {} point(s) below {} MHz are outside the validity of the two-level theory",
                          flagged, kTheoryValidityRf));
  return curve;
}

}  // namespace tpmr
