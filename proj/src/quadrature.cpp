#include "tpmr/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tpmr {

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v = eig.eigenvectors()(0, i);
    rule.weights[i] = v * v;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  // Symmetrise so the odd moments vanish exactly.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace tpmr
