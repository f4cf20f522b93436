#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dwq/poly.hpp"

using namespace dwq::gradedforms;

TEST_CASE("canonical normal form and exact equality") {
  Poly x = Poly::variable(0);
  Poly y = Poly::variable(1);
  // (x + y)^2 == x^2 + 2xy + y^2
  Poly lhs = (x + y) * (x + y);
  Poly rhs = x * x + Poly::constant(2) * x * y + y * y;
  CHECK(lhs == rhs);
  // x - x normalizes to the canonical empty form
  CHECK((x - x).is_zero());
  CHECK((x - x) == Poly{});
  // rational coefficients stay exact: x/3 * 3 == x
  CHECK((x * Poly::constant(1, 3) * Poly::constant(3)) == x);
}

TEST_CASE("derivative") {
  Poly x = Poly::variable(0);
  Poly y = Poly::variable(1);
  Poly f = x * x * y + Poly::constant(5) * y + Poly::constant(7);
  CHECK(f.derivative(0) == Poly::constant(2) * x * y);
  CHECK(f.derivative(1) == x * x + Poly::constant(5));
  CHECK(f.derivative(2).is_zero());
  CHECK(Poly::constant(3).derivative(0).is_zero());
}

TEST_CASE("evaluation") {
  Poly x = Poly::variable(0);
  Poly y = Poly::variable(1);
  Poly f = x * x * y - Poly::constant(1, 2);
  const double vals[] = {3.0, 2.0};
  CHECK(f.eval(vals) == doctest::Approx(17.5).epsilon(1e-15));
  CHECK(f.eval_exact({{0, Rat(3)}, {1, Rat(2)}}) == Rat(35, 2));
}

TEST_CASE("pow and degree") {
  Poly x = Poly::variable(0);
  CHECK(x.pow(0) == Poly::constant(1));
  CHECK(x.pow(3) == x * x * x);
  CHECK((x.pow(3) + x).degree() == 3);
  CHECK(Poly{}.degree() == 0);
  CHECK_THROWS_AS(x.pow(-1), dwq::InvalidParameter);
}

TEST_CASE("printing") {
  Poly x = Poly::variable(0);
  Poly y = Poly::variable(1);
  auto name = [](int v) { return v == 0 ? std::string("x") : std::string("y"); };
  CHECK(Poly{}.str(name) == "0");
  CHECK((x * x - Poly::constant(1, 2) * y).str(name) == "x^2 - 1/2*y");
}
