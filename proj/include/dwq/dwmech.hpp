#pragma once
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dwq/clifford.hpp"
#include "dwq/gradedforms.hpp"
#include "dwq/parallel.hpp"

namespace dwq::dwmech {

using clifford::Metric;
using gradedforms::PhaseContext;
using gradedforms::Poly;
using gradedforms::SolutionSample;
using gradedforms::SolutionSampler;

// Scalar field theory L = 1/2 d_i y^a d^i y_a - V(y) over a diagonal metric.
class ScalarModel {
public:
  ScalarModel(Metric metric, int m, Poly potential);

  const Metric& metric() const { return metric_; }
  int n() const { return metric_.dim(); }
  int m() const { return m_; }
  const PhaseContext& context() const { return ctx_; }
  const Poly& potential() const { return potential_; }

  double V(std::span<const double> y) const;
  double dV(int a, std::span<const double> y) const;

  double lagrangian(std::span<const double> y,
                    std::span<const double> dy) const;
  // H = 1/2 p^i_a p^a_i + V(y), indices lowered with the metric
  double hamiltonian(std::span<const double> y,
                     std::span<const double> p) const;
  double dH_dy(int a, std::span<const double> y,
               std::span<const double> p) const;
  double dH_dp(int i, int a, std::span<const double> p) const;
  Poly hamiltonian_poly() const;

private:
  Metric metric_;
  int m_;
  PhaseContext ctx_;
  Poly potential_;
};

// 1/2 (m_f^2/hbar^2) y^2 for a single field
Poly quadratic_potential(const PhaseContext& ctx, double mass, double hbar);
Poly quadratic_potential_exact(const PhaseContext& ctx, long num, long den);

struct JetPoint {
  std::vector<double> x;  // n
  std::vector<double> y;  // m
  std::vector<double> dy; // n*m, [i*m + a]
};

// p^i_a = dL/d(d_i y^a) = g^{ij} d_j y_a
std::vector<double> polymomenta(const ScalarModel& model, const JetPoint& jp);

double dw_hamiltonian(const ScalarModel& model, std::span<const double> y,
                      std::span<const double> p);

// ---------------------------------------------------------------------
// Solution samplers
// ---------------------------------------------------------------------

// y^a = amp[a] cos(k_i x^i) with analytic derivatives; a Klein-Gordon
// solution when g^{ij} k_i k_j matches V''.
SolutionSampler plane_wave_sampler(const ScalarModel& model,
                                   std::vector<double> k,
                                   std::vector<double> amp);

// constant field configuration, p = 0
SolutionSampler constant_sampler(const ScalarModel& model,
                                 std::vector<double> y0);

// wraps per-field callables; derivatives by central differences of step h
SolutionSampler finite_difference_sampler(
    const ScalarModel& model,
    std::function<std::vector<double>(std::span<const double>)> y_of_x,
    double h);

// Tabulated solution on a rectangular grid loaded from CSV with columns
// x0..x{n-1}, y0..y{m-1}, dy<i>_<a>; p is raised from dy, dp/dx by central
// differences on the grid (interior points only).
class GridSolution {
public:
  static GridSolution load_csv(const ScalarModel& model,
                               const std::string& path);
  SolutionSampler sampler() const;
  // interior points (one cell margin), for residual evaluation
  std::vector<std::vector<double>> interior_points() const;

private:
  const ScalarModel* model_ = nullptr;
  std::vector<std::vector<double>> axes_;        // per-dim sorted coordinates
  std::vector<double> y_;                        // [node*m + a]
  std::vector<double> dy_;                       // [node*(n*m) + i*m + a]
  std::size_t node_count_ = 0;
  std::size_t index_of(std::span<const double> x) const;
};

// ---------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------

struct DwEquationResidual {
  double momentum_eq = 0; // max |d_i p^i_a + dH/dy^a|
  double field_eq = 0;    // max |d_i y^a - dH/dp^i_a|
};

DwEquationResidual dw_equations_residual(
    const ScalarModel& model, const SolutionSampler& sol,
    std::span<const std::vector<double>> points, Exec exec = Exec::serial);

// Hamilton-Jacobi data: n functions S^i(x, y) with first partials,
// analytic when provided, otherwise central differences with step fd_step.
struct HJFunctions {
  // S(i, x, y)
  std::function<double(int, std::span<const double>, std::span<const double>)> S;
  // dS^i/dx^k and dS^i/dy^a; leave empty for the finite-difference fallback
  std::function<double(int, int, std::span<const double>,
                       std::span<const double>)> dS_dx;
  std::function<double(int, int, std::span<const double>,
                       std::span<const double>)> dS_dy;
  double fd_step = 1e-5;
};

// |d_i S^i + H(x, y, p = dS/dy)| per point; points are (x..., y...).
std::vector<double> dwhj_residual(const ScalarModel& model,
                                  const HJFunctions& S,
                                  std::span<const std::vector<double>> points,
                                  Exec exec = Exec::serial);

// Bracket equation of motion residual (per point max norm) for a Hamiltonian
// form F against a sampled classical solution.
std::vector<double> eom_residual(const gradedforms::HorizontalForm& F,
                                 const ScalarModel& model,
                                 const SolutionSampler& sol,
                                 std::span<const std::vector<double>> points,
                                 Exec exec = Exec::serial);

} // namespace dwq::dwmech
