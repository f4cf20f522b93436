#pragma once
#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "dwq/errors.hpp"

namespace dwq::clifford {

using cplx = std::complex<double>;

// Diagonal spacetime metric, signs in {+1,-1}, index 0 = time.
// sigma() = sign(det g).
class Metric {
public:
  static constexpr int max_dim = 6;

  explicit Metric(std::vector<int> diag);
  // diag(+1,-1,...,-1)
  static Metric minkowski(int n);
  static Metric euclidean(int n);

  int dim() const { return static_cast<int>(diag_.size()); }
  int sign(int i) const { return diag_.at(static_cast<std::size_t>(i)); }
  int sigma() const;

  bool operator==(const Metric& o) const { return diag_ == o.diag_; }
  bool operator!=(const Metric& o) const { return !(*this == o); }

private:
  std::vector<int> diag_;
};

// Element of the Clifford algebra over a diagonal metric, with complex
// scalar coefficients on all 2^n blades. Blade b (bitmask) is the ordered
// product of the generators whose bits are set, lowest index first.
// Generators obey g_i g_j + g_j g_i = 2 g_ij.
class Multivector {
public:
  explicit Multivector(Metric metric);

  static Multivector scalar(const Metric& m, cplx value);
  static Multivector generator(const Metric& m, int i); // gamma_i
  static Multivector generator_upper(const Metric& m, int i); // gamma^i = g^{ii} gamma_i
  static Multivector blade(const Metric& m, std::uint32_t mask, cplx value);

  const Metric& metric() const { return metric_; }
  int dim() const { return metric_.dim(); }
  std::size_t size() const { return coeffs_.size(); }

  cplx operator[](std::uint32_t blade_mask) const {
    return coeffs_.at(blade_mask);
  }
  void set(std::uint32_t blade_mask, cplx v) { coeffs_.at(blade_mask) = v; }

  cplx scalar_part() const { return coeffs_[0]; }
  Multivector grade(int k) const;
  double max_abs() const; // max-norm over blade coefficients

  Multivector operator+(const Multivector& o) const;
  Multivector operator-(const Multivector& o) const;
  Multivector operator-() const;
  Multivector operator*(cplx s) const;
  friend Multivector operator*(cplx s, const Multivector& a) { return a * s; }

  // Geometric product.
  Multivector operator*(const Multivector& o) const;

  bool near(const Multivector& o, double tol) const;
  bool operator==(const Multivector& o) const;

private:
  void check_compatible(const Multivector& o) const;

  Metric metric_;
  std::vector<cplx> coeffs_;
};

// Sign and resulting metric factor of the product of basis blades a*b.
// Returned value is the coefficient of blade a^b (xor) in the product.
int blade_product_sign(const Metric& m, std::uint32_t a, std::uint32_t b);

// The volume element gamma = i^{n(n-1)/2} sigma^{1/2} g_0 g_1 ... g_{n-1},
// normalized so that gamma*gamma = 1. sigma^{1/2} = i when sigma = -1.
Multivector gamma_top(const Metric& m);

// Truncated exponential series sum a^k / k!, stopped once the geometric
// tail bound drops below tol in the max-coefficient norm.
Multivector mv_exp(const Multivector& a, double tol = 1e-14);

// Clifford realization of the paired polymomentum / volume-form operators:
// p_hat[i] = kappa g^i gamma, omega_hat[j] = kappa^{-1} gamma g_j.
// compose() is the symmetrized product (ab+ba)/2; on this pair it yields
// delta^i_j exactly, while the plain product does so on the diagonal only.
class OperatorPair {
public:
  OperatorPair(const Metric& m, double kappa);

  const Multivector& p_hat(int i) const { return p_hat_.at(static_cast<std::size_t>(i)); }
  const Multivector& omega_hat(int j) const { return omega_hat_.at(static_cast<std::size_t>(j)); }
  double kappa() const { return kappa_; }

  // Symmetrized operator composition p_hat(i) o omega_hat(j).
  Multivector compose(int i, int j) const;
  // compose(i,j) - compose(j reversed); zero for all pairs.
  Multivector commutator(int i, int j) const;

private:
  double kappa_;
  std::vector<Multivector> p_hat_;
  std::vector<Multivector> omega_hat_;
};

// Symmetrized product (ab + ba) / 2.
Multivector sym_product(const Multivector& a, const Multivector& b);

} // namespace dwq::clifford
