#pragma once
#include <vector>

namespace dwq::quantum {

// Orthonormal Hermite functions h_k(xi) = H_k(xi) e^{-xi^2/2} /
// sqrt(2^k k! sqrt(pi)); L^2-orthonormal on the line.
double hermite_function(int k, double xi);
// h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}
double hermite_function_derivative(int k, double xi);
// h_k'' = (xi^2 - 2k - 1) h_k
double hermite_function_second_derivative(int k, double xi);

// Gauss-Hermite rule for integrals against e^{-xi^2}; exact for polynomial
// integrands of degree <= 2 npoints - 1.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermite gauss_hermite(int npoints);

// Hermite polynomials orthonormal w.r.t. e^{-xi^2} (h_k without the
// Gaussian), evaluated for 0..kmax at xi; used with the quadrature above.
std::vector<double> orthonormal_hermite_row(int kmax, double xi);

} // namespace dwq::quantum
