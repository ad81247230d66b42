#include "tpmr/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "json.hpp"

namespace tpmr {

namespace {

constexpr double kFourLn2 = 2.772588722239781;

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  return m;
}

double depth_range(const Spectrum& s) {
  const auto [lo, hi] = std::minmax_element(s.contrast.begin(), s.contrast.end());
  return *hi - *lo;
}

double value_at(const Spectrum& s, double x) {
  const auto it = std::lower_bound(s.detuning.begin(), s.detuning.end(), x);
  std::size_t i = static_cast<std::size_t>(it - s.detuning.begin());
  if (i == s.size()) i = s.size() - 1;
  if (i > 0 && std::abs(s.detuning[i - 1] - x) < std::abs(s.detuning[i] - x)) --i;
  return s.contrast[i];
}

// Parameter layout: [baseline, (center, log fwhm, log depth) * n].
struct Model {
  const Spectrum& s;
  int n;

  // Centres stay on the grid, widths between half a grid step and the span.
  bool feasible(const Eigen::VectorXd& p) const {
    const double lo = s.detuning.front(), hi = s.detuning.back();
    const double min_w = 0.5 * (hi - lo) / static_cast<double>(s.size() - 1);
    for (int j = 0; j < n; ++j) {
      const double c = p[1 + 3 * j], w = std::exp(p[2 + 3 * j]);
      if (!(c >= lo && c <= hi && w >= min_w && w <= hi - lo)) return false;
    }
    return true;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      double y = p[0];
      for (int j = 0; j < n; ++j) {
        const double u = (s.detuning[i] - p[1 + 3 * j]) / std::exp(p[2 + 3 * j]);
        y -= std::exp(p[3 + 3 * j]) * std::exp(-kFourLn2 * u * u);
      }
      r[static_cast<Eigen::Index>(i)] = y - s.contrast[i];
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(s.size()), 1 + 3 * n);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      jac(row, 0) = 1.0;
      for (int j = 0; j < n; ++j) {
        const double w = std::exp(p[2 + 3 * j]);
        const double d = std::exp(p[3 + 3 * j]);
        const double u = (s.detuning[i] - p[1 + 3 * j]) / w;
        const double g = d * std::exp(-kFourLn2 * u * u);
        jac(row, 1 + 3 * j) = -g * 2.0 * kFourLn2 * u / w;
        jac(row, 2 + 3 * j) = -g * 2.0 * kFourLn2 * u * u;
        jac(row, 3 + 3 * j) = -g;
      }
    }
    return jac;
  }
};

FitResult levenberg_marquardt(const Spectrum& s, std::span<const double> centers, const FitOptions& opt) {
  const int n = static_cast<int>(centers.size());
  const double base = median(s.contrast);
  const double range = std::max(depth_range(s), std::numeric_limits<double>::min());
  Eigen::VectorXd p(1 + 3 * n);
  p[0] = base;
  for (int j = 0; j < n; ++j) {
    p[1 + 3 * j] = centers[static_cast<std::size_t>(j)];
    p[2 + 3 * j] = std::log(opt.fwhm_guess);
    p[3 + 3 * j] = std::log(std::max(base - value_at(s, centers[static_cast<std::size_t>(j)]), 1e-3 * range));
  }

  const Model model{s, n};
  Eigen::VectorXd r = model.residual(p);
  double rss = r.squaredNorm();
  double lambda = 1e-3;
  FitResult out;
  out.n_peaks = n;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd jac = model.jacobian(p);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac * jac.colwise().norm().cwiseMax(1e-300).cwiseInverse().asDiagonal());
    qr.setThreshold(1e-12);
    if (qr.rank() < jac.cols()) {
      out.message = fmt::format("rank-deficient Jacobian (rank {} of {})", qr.rank(), jac.cols());
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal();
      step = a.ldlt().solve(-grad);
      const Eigen::VectorXd trial = p + step;
      if (!model.feasible(trial)) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd r_trial = model.residual(trial);
      const double rss_trial = r_trial.squaredNorm();
      if (std::isfinite(rss_trial) && rss_trial <= rss) {
        p = trial;
        r = r_trial;
        rss = rss_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      out.converged = true;
      out.message = "no further decrease at maximum damping";
      break;
    }
    if (step.norm() <= opt.rel_tol * (p.norm() + opt.rel_tol)) {
      out.converged = true;
      out.message = "parameter tolerance reached";
      ++it;
      break;
    }
  }
  if (it >= opt.max_iterations && out.message.empty()) out.message = "iteration limit reached";
  out.iterations = it;
  out.baseline = p[0];
  out.rss = rss;
  for (int j = 0; j < n; ++j) out.dips.push_back({p[1 + 3 * j], std::exp(p[2 + 3 * j]), std::exp(p[3 + 3 * j])});
  std::sort(out.dips.begin(), out.dips.end(), [](const auto& a, const auto& b) { return a.center < b.center; });
  return out;
}

std::vector<double> deepest(const Spectrum& s, std::span<const double> xs, std::size_t count) {
  std::vector<double> v(xs.begin(), xs.end());
  std::stable_sort(v.begin(), v.end(), [&](double a, double b) { return value_at(s, a) < value_at(s, b); });
  v.resize(std::min(count, v.size()));
  std::sort(v.begin(), v.end());
  return v;
}

double residual_minimum(const Spectrum& s, const FitResult& fit) {
  double best = s.detuning.front();
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    double y = fit.baseline;
    for (const auto& d : fit.dips) {
      const double u = (s.detuning[i] - d.center) / d.fwhm;
      y -= d.depth * std::exp(-kFourLn2 * u * u);
    }
    const double res = s.contrast[i] - y;
    if (res < lowest) {
      lowest = res;
      best = s.detuning[i];
    }
  }
  return best;
}

std::vector<double> pad_by_symmetry(const Spectrum& s, std::span<const double> init, int n_peaks, double pump,
                                    double radius) {
  const auto carriers = deepest(s, init, 3);
  std::vector<double> out;
  for (double c : carriers)
    for (double shift : {-pump, 0.0, pump}) {
      double pos = c + shift;
      if (pos < s.detuning.front() || pos > s.detuning.back()) continue;
      for (double x : init)
        if (std::abs(x - pos) < 0.5 * radius) pos = x;
      out.push_back(pos);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (static_cast<int>(out.size()) > n_peaks) out = deepest(s, out, static_cast<std::size_t>(n_peaks));
  return out;
}

}  // namespace

std::vector<double> detect_peaks(const Spectrum& s, double prominence, double dedup_radius) {
  if (s.size() == 0) throw std::invalid_argument("detect_peaks: empty spectrum");
  const double base = median(s.contrast);
  std::vector<std::size_t> minima;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double y = s.contrast[i];
    const bool left = i == 0 || y <= s.contrast[i - 1];
    const bool right = i + 1 == s.size() || y < s.contrast[i + 1];
    if (left && right && base - y >= prominence && base - y > 0) minima.push_back(i);
  }
  std::stable_sort(minima.begin(), minima.end(),
                   [&](std::size_t a, std::size_t b) { return s.contrast[a] < s.contrast[b]; });
  std::vector<double> kept;
  for (std::size_t i : minima) {
    const double x = s.detuning[i];
    if (std::none_of(kept.begin(), kept.end(), [&](double k) { return std::abs(k - x) < dedup_radius; }))
      kept.push_back(x);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

double model_score(double rss, std::size_t n, int n_params) {
  const double nn = static_cast<double>(n);
  return nn * std::log(rss / nn) + 2.0 * n_params;
}

FitResult fit_gaussians(const Spectrum& s, int n_peaks, std::span<const double> init, const FitOptions& opt) {
  s.validate();
  if (n_peaks != 3 && n_peaks != 9) throw std::invalid_argument("n_peaks must be 3 or 9");
  if (static_cast<int>(s.size()) <= 1 + 3 * n_peaks) throw std::invalid_argument("spectrum too short for fit");
  if (!(opt.fwhm_guess > 0)) throw std::invalid_argument("fit.fwhm_guess must be > 0");

  std::vector<double> detected;
  if (init.empty()) {
    detected = detect_peaks(s, opt.prominence >= 0 ? opt.prominence : 0.05 * depth_range(s), opt.fwhm_guess);
    init = detected;
  }
  const auto hint = opt.pump_hint ? opt.pump_hint : s.meta_number("pump_freq_mhz");
  std::vector<double> centers;
  if (n_peaks == 9 && hint && *hint > 0 && !init.empty())
    centers = pad_by_symmetry(s, init, n_peaks, *hint, opt.fwhm_guess);
  else if (static_cast<int>(init.size()) >= n_peaks)
    centers = deepest(s, init, static_cast<std::size_t>(n_peaks));
  else
    centers.assign(init.begin(), init.end());

  FitResult fit;
  while (true) {
    if (centers.empty()) centers.push_back(s.detuning[static_cast<std::size_t>(
        std::min_element(s.contrast.begin(), s.contrast.end()) - s.contrast.begin())]);
    fit = levenberg_marquardt(s, centers, opt);
    if (static_cast<int>(centers.size()) >= n_peaks) break;
    centers.clear();
    for (const auto& d : fit.dips) centers.push_back(d.center);
    centers.push_back(residual_minimum(s, fit));
  }
  const double floor = s.size() * std::pow(opt.resolution * depth_range(s), 2);
  fit.score = model_score(std::max(fit.rss, std::max(floor, std::numeric_limits<double>::min())), s.size(),
                          1 + 3 * n_peaks);
  return fit;
}

FitResult select_model(const Spectrum& s, const FitOptions& opt) {
  const double range = depth_range(s);
  const double prominence = opt.prominence >= 0 ? opt.prominence : 0.05 * range;
  const auto peaks = detect_peaks(s, prominence, opt.fwhm_guess);
  FitResult three = fit_gaussians(s, 3, peaks, opt);
  FitResult nine = fit_gaussians(s, 9, peaks, opt);
  return nine.score < three.score ? nine : three;
}

double extract_t2star(const GaussianDip& dip) {
  if (!(dip.fwhm > 0)) throw std::invalid_argument("extract_t2star: fwhm must be > 0");
  return 1.0 / dip.fwhm;
}

Regression splitting_regression(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("splitting_regression: need at least 2 points");
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= points.size();
  my /= points.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 1e-12 * (1.0 + mx * mx))) throw std::invalid_argument("splitting_regression: degenerate pump values");
  Regression out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return out;
}

const GaussianDip& nearest_dip(const FitResult& fit, double target) {
  if (fit.dips.empty()) throw std::invalid_argument("nearest_dip: no dips");
  return *std::min_element(fit.dips.begin(), fit.dips.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.center - target) < std::abs(b.center - target);
  });
}

std::string fit_to_json(const FitResult& fit) {
  nlohmann::ordered_json j;
  j["dips"] = nlohmann::ordered_json::array();
  for (const auto& d : fit.dips) j["dips"].push_back({{"center", d.center}, {"fwhm", d.fwhm}, {"depth", d.depth}});
  j["baseline"] = fit.baseline;
  j["rss"] = fit.rss;
  j["n_peaks"] = fit.n_peaks;
  j["score"] = fit.score;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["message"] = fit.message;
  return j.dump(2);
}

void write_fit_csv(std::ostream& out, const FitResult& fit) {
  out << "center,fwhm,depth\n";
  for (const auto& d : fit.dips)
    out << format_number(d.center) << ',' << format_number(d.fwhm) << ',' << format_number(d.depth) << '\n';
}

}  // namespace tpmr
