#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dwq/parallel.hpp"
#include "dwq/poly.hpp"

namespace dwq::gradedforms {

// Variable registry for the polymomentum phase space of m fields over an
// n-dimensional base. Ids are laid out as
//   x^i   -> i                  (horizontal, 0 <= i < n)
//   y^a   -> n + a              (0 <= a < m)
//   p^i_a -> n + m + i*m + a
// so values passed to Poly::eval use the same layout.
class PhaseContext {
public:
  PhaseContext(int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }
  int var_count() const { return n_ + m_ + n_ * m_; }
  int vertical_count() const { return m_ + n_ * m_; }

  int x_var(int i) const;
  int y_var(int a) const;
  int p_var(int i, int a) const;

  bool is_vertical(int id) const { return id >= n_; }
  // index of a vertical variable among the verticals (y first, then p)
  int vert_index(int id) const { return id - n_; }
  int vert_var(int vi) const { return n_ + vi; }

  std::string var_name(int id) const;

  bool operator==(const PhaseContext& o) const = default;

private:
  int n_;
  int m_;
};

// Horizontal q-form with Poly coefficients, stored on strictly increasing
// dx multi-indices (bitmask over 0..n-1). Degree is fixed at construction;
// any degree in [0, n] can be held (bracket results can have intermediate
// degree), but the polysymplectic map is only defined for q in {0, n-1, n}.
class HorizontalForm {
public:
  HorizontalForm(PhaseContext ctx, int degree);

  const PhaseContext& ctx() const { return ctx_; }
  int degree() const { return degree_; }
  bool is_zero() const { return comps_.empty(); }

  const std::map<std::uint32_t, Poly>& components() const { return comps_; }
  Poly component(std::uint32_t mask) const;
  void set_component(std::uint32_t mask, Poly c);

  HorizontalForm operator+(const HorizontalForm& o) const;
  HorizontalForm operator-(const HorizontalForm& o) const;
  HorizontalForm operator*(const Poly& c) const;
  bool operator==(const HorizontalForm& o) const;

private:
  PhaseContext ctx_;
  int degree_;
  std::map<std::uint32_t, Poly> comps_;
};

// Convenience constructors for the forms the theory actually uses.
HorizontalForm zero_form(const PhaseContext& ctx, Poly f); // q = 0
HorizontalForm coordinate_form(const PhaseContext& ctx, int a); // y^a
HorizontalForm momentum_form(const PhaseContext& ctx, int a); // p_a = p^i_a w_i
HorizontalForm momentum_component_form(const PhaseContext& ctx, int i, int a); // p^i_a
HorizontalForm field_volume_form(const PhaseContext& ctx, int b, int j); // y^b w_j
HorizontalForm omega_wedge(const PhaseContext& ctx, Poly f, int i); // f w_i
HorizontalForm volume_form(const PhaseContext& ctx, Poly f); // f w (q = n)

// d^V F: sum over vertical variables of dF_I/dz^v dz^v ^ dx^I.
struct VerticalDifferential {
  PhaseContext ctx;
  int source_degree = 0;
  // (vertical var id, horizontal mask) -> coefficient
  std::map<std::pair<int, std::uint32_t>, Poly> terms;
};

VerticalDifferential vertical_differential(const HorizontalForm& F);

// Vertical multivector assigned to a Hamiltonian form by the polysymplectic
// map. For source degree q < n this is X^{v,J} d_v ^ d_{j1} ^ ... (one
// vertical factor, |J| = n-q-1 horizontal factors); for q = n it is the
// vertical-tangent-valued one-form Xt^v_k dx^k (x) d_v.
struct VerticalMultivector {
  enum class Kind { multivector, tangent_one_form };
  PhaseContext ctx;
  Kind kind = Kind::multivector;
  int source_degree = 0;
  // multivector: (vertical var id, horizontal mask J)
  std::map<std::pair<int, std::uint32_t>, Poly> comps;
  // tangent_one_form: (vertical var id, horizontal index k)
  std::map<std::pair<int, int>, Poly> tcomps;
};

struct HamiltonianSolve {
  VerticalMultivector X;
  // basis of the homogeneous solutions (constant coefficients); X plus any
  // Poly-combination of these solves the same contraction equation
  std::vector<VerticalMultivector> kernel;
};

// Solve X . Omega = d^V F with Omega = -dy^a ^ dp^i_a ^ w_i; free components
// are canonicalized to zero. Throws NotHamiltonian when no solution exists
// and UnsupportedDegree for degrees outside {0, n-1, n}.
HamiltonianSolve hamiltonian_multivector_full(const HorizontalForm& F);
VerticalMultivector hamiltonian_multivector(const HorizontalForm& F);
bool is_hamiltonian(const HorizontalForm& F);

// X . Omega as a horizontal-plus-one-vertical form, for back-substitution
// checks; exact equality with vertical_differential(F) certifies a solve.
VerticalDifferential contract_polysymplectic(const VerticalMultivector& X);

// Graded Poisson bracket (-1)^{n-r} X_{F1} . d^V F2 of two Hamiltonian
// forms; the result has degree r+s-n+1.
HorizontalForm graded_bracket(const HorizontalForm& F1, const HorizontalForm& F2);

// Same bracket with the first argument's multivector supplied explicitly;
// lets tests probe that the kernel of the polysymplectic solve does not
// leak into bracket values.
HorizontalForm graded_bracket_with(const VerticalMultivector& X1,
                                   const HorizontalForm& F2);

// Checks {F1,F2} = -(-1)^{(n-r-1)(n-s-1)} {F2,F1} by exact Poly equality.
bool graded_antisymmetry_check(const HorizontalForm& F1, const HorizontalForm& F2);

// Pointwise data of a classical solution: fields, polymomenta and their
// x-derivatives at one base point.
struct SolutionSample {
  std::vector<double> x;  // n
  std::vector<double> y;  // m
  std::vector<double> p;  // n*m, [i*m + a]
  std::vector<double> dy; // n*m, d_k y^a at [k*m + a]
  std::vector<double> dp; // n*n*m, d_k p^i_a at [(k*n + i)*m + a]
};
using SolutionSampler =
    std::function<SolutionSample(std::span<const double> x)>;

// Residual of the bracket equation of motion dF = {Hw, F} + d^hor F on a
// sampled solution; H is the DW Hamiltonian as a Poly over ctx variables.
// Returns the max-norm residual per point.
std::vector<double> equation_of_motion_residual(
    const HorizontalForm& F, const Poly& H, const SolutionSampler& sol,
    std::span<const std::vector<double>> points, Exec exec = Exec::serial);

// Textual form serialization; exact round trip.
std::string to_string(const HorizontalForm& F);
HorizontalForm parse_form(const PhaseContext& ctx, const std::string& text);

} // namespace dwq::gradedforms
