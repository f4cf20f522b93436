#include "dwq/hermite.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "dwq/errors.hpp"

namespace dwq::quantum {

namespace {
const double pi_quarter = std::pow(std::numbers::pi, -0.25);
}

double hermite_function(int k, double xi) {
  if (k < 0) throw InvalidParameter("hermite_function: negative order");
  // h_k = xi sqrt(2/k) h_{k-1} - sqrt((k-1)/k) h_{k-2}
  double hm2 = 0.0;
  double hm1 = pi_quarter * std::exp(-0.5 * xi * xi);
  if (k == 0) return hm1;
  double h = 0.0;
  for (int j = 1; j <= k; ++j) {
    h = xi * std::sqrt(2.0 / j) * hm1 -
        std::sqrt(static_cast<double>(j - 1) / j) * hm2;
    hm2 = hm1;
    hm1 = h;
  }
  return h;
}

double hermite_function_derivative(int k, double xi) {
  const double lower = (k > 0) ? std::sqrt(k / 2.0) * hermite_function(k - 1, xi) : 0.0;
  return lower - std::sqrt((k + 1) / 2.0) * hermite_function(k + 1, xi);
}

double hermite_function_second_derivative(int k, double xi) {
  return (xi * xi - 2.0 * k - 1.0) * hermite_function(k, xi);
}

GaussHermite gauss_hermite(int npoints) {
  if (npoints < 1) throw InvalidParameter("gauss_hermite: npoints < 1");
  // Golub-Welsch on the Jacobi matrix with off-diagonal sqrt(k/2)
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(npoints);
  Eigen::VectorXd sub(npoints - 1 > 0 ? npoints - 1 : 0);
  for (int k = 1; k < npoints; ++k) sub(k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub);
  if (es.info() != Eigen::Success)
    throw ConvergenceFailure("gauss_hermite: eigensolve failed");
  GaussHermite gh;
  gh.nodes.resize(static_cast<std::size_t>(npoints));
  gh.weights.resize(static_cast<std::size_t>(npoints));
  const double total = std::sqrt(std::numbers::pi); // integral of e^{-x^2}
  for (int i = 0; i < npoints; ++i) {
    gh.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    gh.weights[static_cast<std::size_t>(i)] = total * v0 * v0;
  }
  return gh;
}

std::vector<double> orthonormal_hermite_row(int kmax, double xi) {
  // p_0 = pi^{-1/4}; p_k = xi sqrt(2/k) p_{k-1} - sqrt((k-1)/k) p_{k-2}
  std::vector<double> row(static_cast<std::size_t>(kmax + 1));
  row[0] = pi_quarter;
  if (kmax >= 1) row[1] = xi * std::sqrt(2.0) * row[0];
  for (int k = 2; k <= kmax; ++k)
    row[static_cast<std::size_t>(k)] =
        xi * std::sqrt(2.0 / k) * row[static_cast<std::size_t>(k - 1)] -
        std::sqrt(static_cast<double>(k - 1) / k) * row[static_cast<std::size_t>(k - 2)];
  return row;
}

} // namespace dwq::quantum
