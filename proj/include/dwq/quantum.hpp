#pragma once
#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dwq/clifford.hpp"
#include "dwq/hermite.hpp"
#include "dwq/parallel.hpp"

namespace dwq::quantum {

using clifford::Metric;
using clifford::Multivector;
using cplx = std::complex<double>;

// Free or polynomially self-interacting scalar field on the (x, y)
// configuration space; n = 2 (one time, one space) throughout this module.
class QuantumModel {
public:
  QuantumModel(Metric metric, double mass, double hbar = 1.0,
               double kappa = 1.0, std::vector<double> potential = {});
  static QuantumModel free_field(double mass = 1.0, double hbar = 1.0,
                                 double kappa = 1.0);

  const Metric& metric() const { return metric_; }
  int n() const { return metric_.dim(); }
  double mass() const { return mass_; }
  double hbar() const { return hbar_; }
  double kappa() const { return kappa_; }
  double hk() const { return hbar_ * kappa_; }

  // V(y) as coefficients of y^k; defaults to m^2 y^2 / 2 hbar^2
  const std::vector<double>& potential() const { return potential_; }
  bool quadratic_default() const { return quadratic_default_; }
  double V(double y) const;

  // natural oscillator width sqrt(kappa hbar^2 / m)
  double ell() const;

private:
  Metric metric_;
  double mass_, hbar_, kappa_;
  std::vector<double> potential_;
  bool quadratic_default_;
};

// ---------------------------------------------------------------------
// DW Hamiltonian operator H = -1/2 hbar^2 kappa^2 d_yy + V(y)
// ---------------------------------------------------------------------

// pointwise, with the second derivative supplied
double apply_dw_hamiltonian(const QuantumModel& m, double f, double ddf,
                            double y);
cplx apply_dw_hamiltonian(const QuantumModel& m, cplx f, cplx ddf, double y);

// fourth-order finite-difference stencil on a callable
double apply_dw_hamiltonian_fd(const QuantumModel& m,
                               const std::function<double(double)>& f,
                               double y, double h = 1e-2);

// uniform grid starting at y0, central second differences, zero Dirichlet
// beyond the ends
std::vector<double> apply_dw_hamiltonian_grid(const QuantumModel& m,
                                              std::span<const double> f,
                                              double y0, double dy);

// function expanded over oscillator eigenfunctions of width ell
struct SpectralFunction {
  double ell = 1.0;
  std::vector<double> coeffs;
  double operator()(double y) const;
  double second_derivative(double y) const;
};

SpectralFunction spectral_project(const QuantumModel& m,
                                  const std::function<double(double)>& f,
                                  int basis);
SpectralFunction apply_dw_hamiltonian_spectral(const QuantumModel& m,
                                               const SpectralFunction& f);

// ---------------------------------------------------------------------
// Eigenproblem H f = chi f
// ---------------------------------------------------------------------
struct EigenPair {
  double chi;
  SpectralFunction f;
};

struct EigenSolution {
  std::vector<EigenPair> pairs;
  double max_matrix_residual = 0.0; // certification of ||H c - chi c||
};

// spectral solve in the oscillator basis; exact quadrature for poly V
EigenSolution eigensolve(const QuantumModel& m, int n_max);

// dense finite-difference oracle (tridiagonal); returns eigenvalues only
std::vector<double> eigensolve_fd(const QuantumModel& m, int n_max,
                                  int grid_points = 2000,
                                  double half_width_in_ell = 8.0);

// closed forms for the default quadratic potential
double chi_closed_form(const QuantumModel& m, int N); // kappa m (N + 1/2)
double mode_function(const QuantumModel& m, int N, double y);
double mode_function_dd(const QuantumModel& m, int N, double y);

// ---------------------------------------------------------------------
// Separated solutions psi = A e^{i(w t - k x)} f_N(y),
// psi_mu = (i hbar kappa / chi) d_mu(phase) f_N
// ---------------------------------------------------------------------
struct ModeSolution {
  int N;
  double k;
  double chi;
  double omega; // omega^2 - k^2 = chi^2 / (hbar kappa)^2
};
ModeSolution mode_params(const QuantumModel& m, int N, double k);

struct WaveTerm {
  cplx amp;
  double k;
  double omega;
  double chi;
  SpectralFunction profile;
};

// Wave with analytic derivatives: a finite sum of separated terms.
class AnalyticWave {
public:
  AnalyticWave(QuantumModel model, std::vector<WaveTerm> terms);

  const QuantumModel& model() const { return model_; }
  const std::vector<WaveTerm>& terms() const { return terms_; }

  cplx psi(double t, double x, double y) const;
  cplx psi_lower(int mu, double t, double x, double y) const;
  // d_nu of the scalar / vector components
  cplx dpsi(int nu, double t, double x, double y) const;
  cplx dpsi_lower(int mu, int nu, double t, double x, double y) const;
  // H acting on the y-profile of each term
  cplx H_psi(double t, double x, double y) const;
  cplx H_psi_lower(int mu, double t, double x, double y) const;
  cplx box_psi(double t, double x, double y) const;  // d_tt - d_xx
  cplx H2_psi(double t, double x, double y) const;

private:
  QuantumModel model_;
  std::vector<WaveTerm> terms_;
};

struct ModeSpec {
  cplx amp;
  int N;
  double k;
};

AnalyticWave assemble_mode(const QuantumModel& m, int N, double k);
AnalyticWave superpose(const QuantumModel& m, std::span<const ModeSpec> specs);
// dispersion deliberately broken; negative-control fixture
AnalyticWave detuned_mode(const QuantumModel& m, int N, double k,
                          double omega);

// ---------------------------------------------------------------------
// Residuals of the covariant Schroedinger system
// ---------------------------------------------------------------------
struct SchrodingerPointResidual {
  double scalar_eq; // |i hbar kappa d_i psi^i - H psi|
  double vector_eq; // max_mu |i hbar kappa d_mu psi - H psi_mu|
};

std::vector<SchrodingerPointResidual> schrodinger_residual(
    const AnalyticWave& wave, std::span<const std::array<double, 3>> points,
    Exec exec = Exec::serial);

// Dirac-operator form of the residual at one point, from raw component
// values; grade 0/1 reproduce the component system, grade 2 is the
// curl of the vector part.
Multivector gamma_form_residual(const Metric& g, double hbar_kappa, cplx psi,
                                std::span<const cplx> psi_lower,
                                std::span<const cplx> dpsi,
                                std::span<const cplx> dpsi_lower, // [mu*n+nu]
                                cplx H_psi, std::span<const cplx> H_psi_lower);
Multivector gamma_form_residual(const AnalyticWave& wave, double t, double x,
                                double y);

// ---------------------------------------------------------------------
// Grid waves and the conservation law
// ---------------------------------------------------------------------
struct GridSpec {
  int nt, nx, ny;
  double t0, x0, y0;
  double dt, dx, dy;
};

class GridWave {
public:
  GridWave(QuantumModel model, GridSpec spec);
  static GridWave sample(const AnalyticWave& wave, const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  const QuantumModel& model() const { return model_; }

  cplx& psi(int it, int ix, int iy) { return psi_[index(it, ix, iy)]; }
  cplx psi(int it, int ix, int iy) const { return psi_[index(it, ix, iy)]; }
  cplx& psi_lower(int mu, int it, int ix, int iy);
  cplx psi_lower(int mu, int it, int ix, int iy) const;

  void save_csv(const std::string& path) const;
  static GridWave load_csv(QuantumModel model, const std::string& path);

private:
  std::size_t index(int it, int ix, int iy) const;
  QuantumModel model_;
  GridSpec spec_;
  std::vector<cplx> psi_, psi0_, psi1_;
};

// max-norm residual of the two-sided current balance on interior nodes
double conservation_residual(const GridWave& w, Exec exec = Exec::serial);

struct ConvergenceStudy {
  std::vector<double> spacing;   // coarsest-axis spacing per level
  std::vector<double> residual;  // conservation residual per level
  double order;                  // mean log2 ratio
};

ConvergenceStudy conservation_convergence(const AnalyticWave& wave,
                                          const GridSpec& base, int levels,
                                          Exec exec = Exec::serial);

// grid-based residuals of the component system (central differences)
std::vector<SchrodingerPointResidual> schrodinger_residual_grid(
    const GridWave& w, Exec exec = Exec::serial);

// |hbar^2 box psi + kappa^{-2} H^2 psi| per point (scalar part)
std::vector<double> second_order_residual(
    const AnalyticWave& wave, std::span<const std::array<double, 3>> points,
    Exec exec = Exec::serial);

// ---------------------------------------------------------------------
// Quasiclassical data and residuals
// ---------------------------------------------------------------------
struct WKBData {
  // S^mu(t, x, y); first partials analytic
  std::function<double(int, double, double, double)> S;
  std::function<double(int, int, double, double, double)> dS_dx; // d_nu S^mu
  std::function<double(int, double, double, double)> dS_dy;
  std::function<double(double, double, double)> R;
  std::function<double(double, double, double)> lap_R; // d_yy R
};

struct WKBPointResidual {
  double main;
  double side1;
  double side2;
  bool singular; // |S| vanished (or went spacelike) at this point
};

std::vector<WKBPointResidual> wkb_residual(
    const QuantumModel& m, const WKBData& w,
    std::span<const std::array<double, 3>> points, bool strict = true,
    Exec exec = Exec::serial);

// main residual with the quantum term forced to zero; bit-identical to the
// classical DW Hamilton-Jacobi residual of the same data
std::vector<double> wkb_classical_residual(
    const QuantumModel& m, const WKBData& w,
    std::span<const std::array<double, 3>> points, Exec exec = Exec::serial);

// S^0 = -chi_0 t, R = exp(-m y^2 / 2 kappa hbar^2): the quasiclassical data
// of the lowest separated solution (default quadratic potential only)
WKBData ground_state_wkb(const QuantumModel& m);

struct HkSweep {
  std::vector<double> scale;        // multiplier on hbar kappa
  std::vector<double> quantum_term; // max |main - classical| over points
  double fitted_exponent;           // log-log slope, 2 for the exact term
};
HkSweep wkb_hk_sweep(const QuantumModel& m, const WKBData& w,
                     std::span<const std::array<double, 3>> points,
                     std::span<const double> scales);

// ---------------------------------------------------------------------
// Exponential decomposition Psi = R exp(i S^mu gamma_mu / hbar kappa)
// ---------------------------------------------------------------------
struct WKBPointExtract {
  cplx R;
  std::vector<cplx> S_upper; // S^mu
};

// Pointwise inversion; the principal branch keeps Re R >= 0, so real
// decompositions come back with R > 0. Throws DecompositionFailure when the
// scalar+vector data sits on the null cone psi^2 = psi_mu psi^mu or the
// reassembly misses the input by more than tol.
WKBPointExtract extract_wkb_point(const QuantumModel& m, cplx psi,
                                  std::span<const cplx> psi_lower,
                                  double tol = 1e-8);

std::vector<WKBPointExtract> extract_wkb(
    const AnalyticWave& wave, std::span<const std::array<double, 3>> points,
    double tol = 1e-8);

} // namespace dwq::quantum
