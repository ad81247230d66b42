#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpmr/spectrum.hpp"

namespace tpmr {

struct GaussianDip {
  double center = 0.0;  ///< MHz
  double fwhm = 0.0;    ///< MHz
  double depth = 0.0;   ///< positive magnitude of the dip
};

struct FitResult {
  std::vector<GaussianDip> dips;  ///< sorted by center
  double baseline = 0.0;
  double rss = 0.0;
  int n_peaks = 0;
  double score = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

struct FitOptions {
  double rel_tol = 1e-8;
  int max_iterations = 500;
  double fwhm_guess = 0.71;   ///< initial width, also the dedup radius of detect_peaks
  double prominence = -1.0;   ///< < 0: 5% of the spectrum's depth range
  /// Smallest resolvable residual, as a fraction of the spectrum's depth
  /// range. The rss entering the score is floored at n*(floor*range)^2 so
  /// that features below this level do not count as extra dips.
  double resolution = 0.02;
  std::optional<double> pump_hint;  ///< MHz; defaults to meta pump_freq_mhz
};

/// Local minima at least `prominence` below the median, strongest first
/// when deduplicating, returned in ascending order.
std::vector<double> detect_peaks(const Spectrum& s, double prominence, double dedup_radius = 0.71);

/// baseline - sum depth*exp(-4 ln2 (x-c)^2/fwhm^2) fitted by damped
/// Gauss-Newton. An empty `init` is replaced by detect_peaks with the
/// default prominence. With a pump hint, nine-dip fits start from the three
/// deepest candidates +- the hint; without one, short lists grow greedily at
/// the residual minimum. Steps that move a centre off the grid or a width
/// below half a grid step are rejected.
FitResult fit_gaussians(const Spectrum& s, int n_peaks, std::span<const double> init, const FitOptions& opt = {});

/// Fits 3 and 9 dips and keeps the lower n ln(rss/n) + 2p; ties keep 3.
FitResult select_model(const Spectrum& s, const FitOptions& opt = {});

double model_score(double rss, std::size_t n, int n_params);

/// Dephasing time (us) as the inverse FWHM (MHz).
double extract_t2star(const GaussianDip& dip);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of offset against pump frequency.
Regression splitting_regression(std::span<const std::pair<double, double>> points);

/// Fitted dip whose center is nearest to `target`.
const GaussianDip& nearest_dip(const FitResult& fit, double target);

std::string fit_to_json(const FitResult& fit);
void write_fit_csv(std::ostream& out, const FitResult& fit);

}  // namespace tpmr
