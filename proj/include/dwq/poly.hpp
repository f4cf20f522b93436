#pragma once
#include <gmpxx.h>

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dwq/errors.hpp"

namespace dwq::gradedforms {

using Rat = mpq_class;

// Monomial over integer variable ids: sorted (var, exponent) pairs,
// exponents strictly positive. The empty monomial is the constant 1.
struct Monomial {
  std::vector<std::pair<int, int>> factors;

  int degree() const;
  int exponent(int var) const;
  bool operator==(const Monomial& o) const { return factors == o.factors; }
  bool operator<(const Monomial& o) const { return factors < o.factors; }
};

Monomial operator*(const Monomial& a, const Monomial& b);

// Multivariate polynomial with exact rational coefficients, kept in a
// canonical sorted-monomial normal form (no zero coefficients stored).
class Poly {
public:
  Poly() = default;
  static Poly constant(Rat c);
  static Poly constant(long num, long den = 1);
  static Poly variable(int var);

  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  const std::map<Monomial, Rat>& terms() const { return terms_; }

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator-() const;
  Poly operator*(const Poly& o) const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly pow(int k) const;

  bool operator==(const Poly& o) const { return terms_ == o.terms_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  // d/d(var); all other variables held fixed.
  Poly derivative(int var) const;

  // Evaluate with values[id] supplying every variable appearing here.
  double eval(std::span<const double> values) const;
  Rat eval_exact(const std::map<int, Rat>& values) const;

  std::string str(const std::function<std::string(int)>& var_name) const;

private:
  void add_term(const Monomial& m, const Rat& c);
  std::map<Monomial, Rat> terms_;
};

} // namespace dwq::gradedforms
