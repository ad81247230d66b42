#pragma once

#include <vector>

namespace tpmr {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  ///< sum to one
};

/// n-point Gauss-Hermite rule for the standard normal density
/// (Golub-Welsch on the probabilists' Hermite recurrence).
QuadratureRule gauss_hermite(int n);

}  // namespace tpmr
