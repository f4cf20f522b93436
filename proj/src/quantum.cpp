#include "dwq/quantum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dwq/errors.hpp"

namespace dwq::quantum {

namespace {
constexpr cplx I{0.0, 1.0};
}

// ---------------------------------------------------------------------
// QuantumModel
// ---------------------------------------------------------------------
QuantumModel::QuantumModel(Metric metric, double mass, double hbar,
                           double kappa, std::vector<double> potential)
    : metric_(std::move(metric)),
      mass_(mass),
      hbar_(hbar),
      kappa_(kappa),
      potential_(std::move(potential)),
      quadratic_default_(potential_.empty()) {
  if (!(mass_ > 0) || !(hbar_ > 0) || !(kappa_ > 0))
    throw InvalidParameter("QuantumModel: mass, hbar, kappa must be positive");
  if (metric_.dim() != 2 || metric_.sign(0) != 1 || metric_.sign(1) != -1)
    throw InvalidDomain("QuantumModel: this module is built for the "
                        "n=2 Minkowski configuration");
  if (quadratic_default_)
    potential_ = {0.0, 0.0, mass_ * mass_ / (2.0 * hbar_ * hbar_)};
}

QuantumModel QuantumModel::free_field(double mass, double hbar, double kappa) {
  return QuantumModel(Metric::minkowski(2), mass, hbar, kappa);
}

double QuantumModel::V(double y) const {
  double v = 0.0;
  for (std::size_t k = potential_.size(); k-- > 0;)
    v = v * y + potential_[k];
  return v;
}

double QuantumModel::ell() const {
  return std::sqrt(kappa_ * hbar_ * hbar_ / mass_);
}

// ---------------------------------------------------------------------
// Hamiltonian application
// ---------------------------------------------------------------------
double apply_dw_hamiltonian(const QuantumModel& m, double f, double ddf,
                            double y) {
  return -0.5 * m.hbar() * m.hbar() * m.kappa() * m.kappa() * ddf + m.V(y) * f;
}

cplx apply_dw_hamiltonian(const QuantumModel& m, cplx f, cplx ddf, double y) {
  return -0.5 * m.hbar() * m.hbar() * m.kappa() * m.kappa() * ddf + m.V(y) * f;
}

double apply_dw_hamiltonian_fd(const QuantumModel& m,
                               const std::function<double(double)>& f,
                               double y, double h) {
  if (!(h > 0)) throw InvalidParameter("apply_dw_hamiltonian_fd: h <= 0");
  const double ddf = (-f(y + 2 * h) + 16 * f(y + h) - 30 * f(y) +
                      16 * f(y - h) - f(y - 2 * h)) /
                     (12 * h * h);
  return apply_dw_hamiltonian(m, f(y), ddf, y);
}

std::vector<double> apply_dw_hamiltonian_grid(const QuantumModel& m,
                                              std::span<const double> f,
                                              double y0, double dy) {
  if (f.size() < 3) throw InvalidDomain("apply_dw_hamiltonian_grid: need >= 3 nodes");
  if (!(dy > 0)) throw InvalidParameter("apply_dw_hamiltonian_grid: dy <= 0");
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double fm = i > 0 ? f[i - 1] : 0.0;
    const double fp = i + 1 < f.size() ? f[i + 1] : 0.0;
    const double ddf = (fp - 2.0 * f[i] + fm) / (dy * dy);
    const double y = y0 + static_cast<double>(i) * dy;
    out[i] = -0.5 * m.hbar() * m.hbar() * m.kappa() * m.kappa() * ddf +
             m.V(y) * f[i];
  }
  return out;
}

// ---------------------------------------------------------------------
// Spectral representation
// ---------------------------------------------------------------------
double SpectralFunction::operator()(double y) const {
  const double xi = y / ell;
  const double scale = 1.0 / std::sqrt(ell);
  double acc = 0.0;
  // single recurrence pass over the basis
  double hm2 = 0.0, hm1 = hermite_function(0, xi);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    double hk;
    if (k == 0) {
      hk = hm1;
    } else {
      hk = xi * std::sqrt(2.0 / static_cast<double>(k)) * hm1 -
           std::sqrt(static_cast<double>(k - 1) / static_cast<double>(k)) * hm2;
      hm2 = hm1;
      hm1 = hk;
    }
    acc += coeffs[k] * hk;
  }
  return scale * acc;
}

double SpectralFunction::second_derivative(double y) const {
  const double xi = y / ell;
  const double scale = 1.0 / (ell * ell * std::sqrt(ell));
  double acc = 0.0;
  double hm2 = 0.0, hm1 = hermite_function(0, xi);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    double hk;
    if (k == 0) {
      hk = hm1;
    } else {
      hk = xi * std::sqrt(2.0 / static_cast<double>(k)) * hm1 -
           std::sqrt(static_cast<double>(k - 1) / static_cast<double>(k)) * hm2;
      hm2 = hm1;
      hm1 = hk;
    }
    acc += coeffs[k] * (xi * xi - 2.0 * static_cast<double>(k) - 1.0) * hk;
  }
  return scale * acc;
}

namespace {

// Hamiltonian matrix in the oscillator basis of width ell; exact Gauss-
// Hermite quadrature for the polynomial potential.
Eigen::MatrixXd hamiltonian_matrix(const QuantumModel& m, int basis) {
  const double ell = m.ell();
  const int deg = static_cast<int>(m.potential().size());
  const int quad_points = basis + deg / 2 + 8;
  const GaussHermite gh = gauss_hermite(quad_points);

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(basis, basis);
  // kinetic part: (hbar^2 kappa^2 / ell^2) * matrix of -1/2 d_xi^2
  const double kin = m.hbar() * m.hbar() * m.kappa() * m.kappa() / (ell * ell);
  for (int j = 0; j < basis; ++j) {
    H(j, j) += kin * 0.25 * (2.0 * j + 1.0);
    if (j + 2 < basis) {
      const double c = -kin * 0.25 * std::sqrt((j + 1.0) * (j + 2.0));
      H(j + 2, j) += c;
      H(j, j + 2) += c;
    }
  }
  // potential part via quadrature: V_{ij} = sum_q w_q P_i(x_q) P_j(x_q) V(ell x_q)
  for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
    const double xq = gh.nodes[q];
    const std::vector<double> row = orthonormal_hermite_row(basis - 1, xq);
    const double vq = gh.weights[q] * m.V(ell * xq);
    for (int i = 0; i < basis; ++i)
      for (int j = 0; j <= i; ++j) {
        const double add = vq * row[static_cast<std::size_t>(i)] *
                           row[static_cast<std::size_t>(j)];
        H(i, j) += add;
        if (i != j) H(j, i) += add;
      }
  }
  return H;
}

} // namespace

SpectralFunction spectral_project(const QuantumModel& m,
                                  const std::function<double(double)>& f,
                                  int basis) {
  const double ell = m.ell();
  const GaussHermite gh = gauss_hermite(basis + 24);
  SpectralFunction out{ell, std::vector<double>(static_cast<std::size_t>(basis), 0.0)};
  // c_k = int f(y) h_k(y/ell)/sqrt(ell) dy = sqrt(ell) int f(ell xi) h_k(xi) dxi
  for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
    const double xq = gh.nodes[q];
    const std::vector<double> row = orthonormal_hermite_row(basis - 1, xq);
    const double fv = f(ell * xq) * gh.weights[q] * std::sqrt(ell);
    for (int k = 0; k < basis; ++k)
      out.coeffs[static_cast<std::size_t>(k)] += fv * row[static_cast<std::size_t>(k)];
  }
  return out;
}

SpectralFunction apply_dw_hamiltonian_spectral(const QuantumModel& m,
                                               const SpectralFunction& f) {
  const int basis = static_cast<int>(f.coeffs.size());
  Eigen::MatrixXd H = hamiltonian_matrix(m, basis);
  Eigen::VectorXd c(basis);
  for (int k = 0; k < basis; ++k) c(k) = f.coeffs[static_cast<std::size_t>(k)];
  Eigen::VectorXd out = H * c;
  SpectralFunction g{f.ell, std::vector<double>(static_cast<std::size_t>(basis))};
  for (int k = 0; k < basis; ++k) g.coeffs[static_cast<std::size_t>(k)] = out(k);
  return g;
}

// ---------------------------------------------------------------------
// Eigenproblem
// ---------------------------------------------------------------------
EigenSolution eigensolve(const QuantumModel& m, int n_max) {
  if (n_max < 0) throw InvalidParameter("eigensolve: n_max < 0");
  const int deg = std::max<int>(2, static_cast<int>(m.potential().size()));
  for (int basis = std::max({2 * (n_max + 1), n_max + 17, 48}); basis <= 512;
       basis *= 2) {
    Eigen::MatrixXd H = hamiltonian_matrix(m, basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success)
      throw ConvergenceFailure("eigensolve: diagonalization failed");

    // Certify against the continuum operator: H maps the basis into the
    // slightly larger basis exactly (polynomial V), so the L2 residual of
    // H f - chi f is computable from the embedded coefficients.
    const int big = basis + deg + 2;
    Eigen::MatrixXd Hbig = hamiltonian_matrix(m, big);

    EigenSolution out;
    bool converged = true;
    for (int N = 0; N <= n_max; ++N) {
      EigenPair pair;
      pair.chi = es.eigenvalues()(N);
      pair.f.ell = m.ell();
      pair.f.coeffs.resize(static_cast<std::size_t>(basis));
      int imax = 0;
      for (int k = 1; k < basis; ++k)
        if (std::abs(es.eigenvectors()(k, N)) >
            std::abs(es.eigenvectors()(imax, N)))
          imax = k;
      const double flip = es.eigenvectors()(imax, N) < 0 ? -1.0 : 1.0;
      for (int k = 0; k < basis; ++k)
        pair.f.coeffs[static_cast<std::size_t>(k)] =
            flip * es.eigenvectors()(k, N);

      Eigen::VectorXd c = Eigen::VectorXd::Zero(big);
      for (int k = 0; k < basis; ++k)
        c(k) = pair.f.coeffs[static_cast<std::size_t>(k)];
      const double res = (Hbig * c - pair.chi * c).norm();
      out.max_matrix_residual = std::max(out.max_matrix_residual, res);
      if (res > 1e-8) converged = false;
      out.pairs.push_back(std::move(pair));
    }
    if (converged) return out;
  }
  throw ConvergenceFailure("eigensolve: basis did not converge below 1e-8");
}

std::vector<double> eigensolve_fd(const QuantumModel& m, int n_max,
                                  int grid_points, double half_width_in_ell) {
  if (grid_points < n_max + 2)
    throw InvalidParameter("eigensolve_fd: grid too small");
  const double L = half_width_in_ell * m.ell();
  const double h = 2.0 * L / (grid_points + 1);
  const double hk2 = m.hbar() * m.hbar() * m.kappa() * m.kappa();
  Eigen::VectorXd diag(grid_points), sub(grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double y = -L + h * (i + 1);
    diag(i) = hk2 / (h * h) + m.V(y);
  }
  sub.setConstant(-0.5 * hk2 / (h * h));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceFailure("eigensolve_fd: diagonalization failed");
  std::vector<double> chis;
  for (int N = 0; N <= n_max; ++N) chis.push_back(es.eigenvalues()(N));
  return chis;
}

double chi_closed_form(const QuantumModel& m, int N) {
  if (!m.quadratic_default())
    throw InvalidParameter("chi_closed_form: needs the quadratic potential");
  return m.kappa() * m.mass() * (N + 0.5);
}

double mode_function(const QuantumModel& m, int N, double y) {
  const double ell = m.ell();
  return hermite_function(N, y / ell) / std::sqrt(ell);
}

double mode_function_dd(const QuantumModel& m, int N, double y) {
  const double ell = m.ell();
  return hermite_function_second_derivative(N, y / ell) /
         (ell * ell * std::sqrt(ell));
}

// ---------------------------------------------------------------------
// Modes and analytic waves
// ---------------------------------------------------------------------
ModeSolution mode_params(const QuantumModel& m, int N, double k) {
  if (N < 0) throw InvalidParameter("mode_params: N < 0");
  double chi;
  if (m.quadratic_default()) {
    chi = chi_closed_form(m, N);
  } else {
    chi = eigensolve(m, N).pairs.back().chi;
  }
  const double w2 = k * k + chi * chi / (m.hk() * m.hk());
  if (!(w2 > 0.0)) throw TachyonicMode("mode_params: omega^2 <= 0");
  return {N, k, chi, std::sqrt(w2)};
}

namespace {

SpectralFunction basis_profile(const QuantumModel& m, int N) {
  if (m.quadratic_default()) {
    SpectralFunction f{m.ell(), std::vector<double>(static_cast<std::size_t>(N + 1), 0.0)};
    f.coeffs.back() = 1.0;
    return f;
  }
  return eigensolve(m, N).pairs.back().f;
}

WaveTerm make_term(const QuantumModel& m, cplx amp, int N, double k,
                   double omega) {
  double chi = m.quadratic_default() ? chi_closed_form(m, N)
                                     : eigensolve(m, N).pairs.back().chi;
  return WaveTerm{amp, k, omega, chi, basis_profile(m, N)};
}

} // namespace

AnalyticWave::AnalyticWave(QuantumModel model, std::vector<WaveTerm> terms)
    : model_(std::move(model)), terms_(std::move(terms)) {}

cplx AnalyticWave::psi(double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_)
    acc += w.amp * std::exp(I * (w.omega * t - w.k * x)) * w.profile(y);
  return acc;
}

cplx AnalyticWave::psi_lower(int mu, double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_) {
    const cplx phase = std::exp(I * (w.omega * t - w.k * x));
    const double c = (mu == 0) ? -model_.hk() * w.omega / w.chi
                               : model_.hk() * w.k / w.chi;
    acc += w.amp * c * phase * w.profile(y);
  }
  return acc;
}

cplx AnalyticWave::dpsi(int nu, double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_) {
    const cplx phase = std::exp(I * (w.omega * t - w.k * x));
    const cplx d = (nu == 0) ? I * w.omega : -I * w.k;
    acc += w.amp * d * phase * w.profile(y);
  }
  return acc;
}

cplx AnalyticWave::dpsi_lower(int mu, int nu, double t, double x,
                              double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_) {
    const cplx phase = std::exp(I * (w.omega * t - w.k * x));
    const double c = (mu == 0) ? -model_.hk() * w.omega / w.chi
                               : model_.hk() * w.k / w.chi;
    const cplx d = (nu == 0) ? I * w.omega : -I * w.k;
    acc += w.amp * c * d * phase * w.profile(y);
  }
  return acc;
}

cplx AnalyticWave::H_psi(double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_)
    acc += w.amp * w.chi * std::exp(I * (w.omega * t - w.k * x)) * w.profile(y);
  return acc;
}

cplx AnalyticWave::H_psi_lower(int mu, double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_) {
    const cplx phase = std::exp(I * (w.omega * t - w.k * x));
    const double c = (mu == 0) ? -model_.hk() * w.omega / w.chi
                               : model_.hk() * w.k / w.chi;
    acc += w.amp * c * w.chi * phase * w.profile(y);
  }
  return acc;
}

cplx AnalyticWave::box_psi(double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_) {
    const cplx phase = std::exp(I * (w.omega * t - w.k * x));
    acc += w.amp * (w.k * w.k - w.omega * w.omega) * phase * w.profile(y);
  }
  return acc;
}

cplx AnalyticWave::H2_psi(double t, double x, double y) const {
  cplx acc = 0.0;
  for (const auto& w : terms_)
    acc += w.amp * w.chi * w.chi * std::exp(I * (w.omega * t - w.k * x)) *
           w.profile(y);
  return acc;
}

AnalyticWave assemble_mode(const QuantumModel& m, int N, double k) {
  const ModeSolution ms = mode_params(m, N, k);
  return AnalyticWave(m, {make_term(m, 1.0, N, k, ms.omega)});
}

AnalyticWave superpose(const QuantumModel& m, std::span<const ModeSpec> specs) {
  std::vector<WaveTerm> terms;
  for (const auto& s : specs) {
    const ModeSolution ms = mode_params(m, s.N, s.k);
    terms.push_back(make_term(m, s.amp, s.N, s.k, ms.omega));
  }
  return AnalyticWave(m, std::move(terms));
}

AnalyticWave detuned_mode(const QuantumModel& m, int N, double k,
                          double omega) {
  return AnalyticWave(m, {make_term(m, 1.0, N, k, omega)});
}

// ---------------------------------------------------------------------
// Schroedinger residuals
// ---------------------------------------------------------------------
std::vector<SchrodingerPointResidual> schrodinger_residual(
    const AnalyticWave& wave, std::span<const std::array<double, 3>> points,
    Exec exec) {
  const QuantumModel& m = wave.model();
  const double hk = m.hk();
  std::vector<SchrodingerPointResidual> out(points.size());
  parallel_for(exec, points.size(), [&](std::size_t i) {
    const auto [t, x, y] = points[i];
    // scalar equation: i hbar kappa d_i psi^i = H psi
    cplx div = 0.0;
    for (int mu = 0; mu < 2; ++mu)
      div += static_cast<double>(m.metric().sign(mu)) *
             wave.dpsi_lower(mu, mu, t, x, y);
    const double scalar_eq = std::abs(I * hk * div - wave.H_psi(t, x, y));
    // vector equations: i hbar kappa d_mu psi = H psi_mu
    double vec = 0.0;
    for (int mu = 0; mu < 2; ++mu)
      vec = std::max(vec, std::abs(I * hk * wave.dpsi(mu, t, x, y) -
                                   wave.H_psi_lower(mu, t, x, y)));
    out[i] = {scalar_eq, vec};
  });
  return out;
}

Multivector gamma_form_residual(const Metric& g, double hbar_kappa, cplx psi,
                                std::span<const cplx> psi_lower,
                                std::span<const cplx> dpsi,
                                std::span<const cplx> dpsi_lower, cplx H_psi,
                                std::span<const cplx> H_psi_lower) {
  const int n = g.dim();
  (void)psi;
  // Psi = psi + psi^mu gamma_mu; residual = i hk gamma^nu d_nu Psi - H Psi
  Multivector res(g);
  for (int nu = 0; nu < n; ++nu) {
    Multivector gnu = Multivector::generator_upper(g, nu);
    Multivector dPsi = Multivector::scalar(g, dpsi[static_cast<std::size_t>(nu)]);
    for (int mu = 0; mu < n; ++mu) {
      const cplx up = static_cast<double>(g.sign(mu)) *
                      dpsi_lower[static_cast<std::size_t>(mu * n + nu)];
      dPsi = dPsi + Multivector::generator(g, mu) * up;
    }
    res = res + gnu * dPsi * (I * hbar_kappa);
  }
  res = res - Multivector::scalar(g, H_psi);
  for (int mu = 0; mu < n; ++mu) {
    const cplx up = static_cast<double>(g.sign(mu)) *
                    H_psi_lower[static_cast<std::size_t>(mu)];
    res = res - Multivector::generator(g, mu) * up;
  }
  return res;
}

Multivector gamma_form_residual(const AnalyticWave& wave, double t, double x,
                                double y) {
  const QuantumModel& m = wave.model();
  const int n = 2;
  std::vector<cplx> psi_lower(n), dpsi(n), dpsi_lower(n * n), H_lower(n);
  for (int mu = 0; mu < n; ++mu) {
    psi_lower[static_cast<std::size_t>(mu)] = wave.psi_lower(mu, t, x, y);
    dpsi[static_cast<std::size_t>(mu)] = wave.dpsi(mu, t, x, y);
    H_lower[static_cast<std::size_t>(mu)] = wave.H_psi_lower(mu, t, x, y);
    for (int nu = 0; nu < n; ++nu)
      dpsi_lower[static_cast<std::size_t>(mu * n + nu)] =
          wave.dpsi_lower(mu, nu, t, x, y);
  }
  return gamma_form_residual(m.metric(), m.hk(), wave.psi(t, x, y), psi_lower,
                             dpsi, dpsi_lower, wave.H_psi(t, x, y), H_lower);
}

// ---------------------------------------------------------------------
// Grid waves
// ---------------------------------------------------------------------
GridWave::GridWave(QuantumModel model, GridSpec spec)
    : model_(std::move(model)), spec_(spec) {
  if (spec_.nt < 1 || spec_.nx < 1 || spec_.ny < 1)
    throw InvalidDomain("GridWave: empty grid");
  if (!(spec_.dt > 0) || !(spec_.dx > 0) || !(spec_.dy > 0))
    throw InvalidDomain("GridWave: spacings must be positive");
  const std::size_t total = static_cast<std::size_t>(spec_.nt) *
                            static_cast<std::size_t>(spec_.nx) *
                            static_cast<std::size_t>(spec_.ny);
  psi_.assign(total, 0.0);
  psi0_.assign(total, 0.0);
  psi1_.assign(total, 0.0);
}

std::size_t GridWave::index(int it, int ix, int iy) const {
  return (static_cast<std::size_t>(it) * static_cast<std::size_t>(spec_.nx) +
          static_cast<std::size_t>(ix)) *
             static_cast<std::size_t>(spec_.ny) +
         static_cast<std::size_t>(iy);
}

cplx& GridWave::psi_lower(int mu, int it, int ix, int iy) {
  return (mu == 0 ? psi0_ : psi1_)[index(it, ix, iy)];
}
cplx GridWave::psi_lower(int mu, int it, int ix, int iy) const {
  return (mu == 0 ? psi0_ : psi1_)[index(it, ix, iy)];
}

GridWave GridWave::sample(const AnalyticWave& wave, const GridSpec& spec) {
  GridWave g(wave.model(), spec);
  for (int it = 0; it < spec.nt; ++it)
    for (int ix = 0; ix < spec.nx; ++ix)
      for (int iy = 0; iy < spec.ny; ++iy) {
        const double t = spec.t0 + it * spec.dt;
        const double x = spec.x0 + ix * spec.dx;
        const double y = spec.y0 + iy * spec.dy;
        g.psi(it, ix, iy) = wave.psi(t, x, y);
        g.psi_lower(0, it, ix, iy) = wave.psi_lower(0, t, x, y);
        g.psi_lower(1, it, ix, iy) = wave.psi_lower(1, t, x, y);
      }
  return g;
}

void GridWave::save_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidDomain("GridWave::save_csv: cannot open " + path);
  f << "t,x,y,re_psi,im_psi,re_psi0,im_psi0,re_psi1,im_psi1\n";
  f.precision(17);
  for (int it = 0; it < spec_.nt; ++it)
    for (int ix = 0; ix < spec_.nx; ++ix)
      for (int iy = 0; iy < spec_.ny; ++iy) {
        const double t = spec_.t0 + it * spec_.dt;
        const double x = spec_.x0 + ix * spec_.dx;
        const double y = spec_.y0 + iy * spec_.dy;
        const cplx p = psi(it, ix, iy);
        const cplx p0 = psi_lower(0, it, ix, iy);
        const cplx p1 = psi_lower(1, it, ix, iy);
        f << t << ',' << x << ',' << y << ',' << p.real() << ',' << p.imag()
          << ',' << p0.real() << ',' << p0.imag() << ',' << p1.real() << ','
          << p1.imag() << "\n";
      }
}

GridWave GridWave::load_csv(QuantumModel model, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidDomain("GridWave::load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "t,x,y,re_psi,im_psi,re_psi0,im_psi0,re_psi1,im_psi1")
    throw InvalidDomain("GridWave::load_csv: bad header in " + path);
  std::vector<std::array<double, 9>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::array<double, 9> row{};
    std::string cell;
    for (int c = 0; c < 9; ++c) {
      if (!std::getline(ss, cell, ','))
        throw InvalidDomain("GridWave::load_csv: short row in " + path);
      row[static_cast<std::size_t>(c)] = std::stod(cell);
    }
    rows.push_back(row);
  }
  auto axis = [&](int col) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[static_cast<std::size_t>(col)]);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto ts = axis(0), xs = axis(1), ys = axis(2);
  if (ts.size() * xs.size() * ys.size() != rows.size())
    throw InvalidDomain("GridWave::load_csv: rows do not form a grid");
  GridSpec spec{static_cast<int>(ts.size()), static_cast<int>(xs.size()),
                static_cast<int>(ys.size()), ts.front(), xs.front(),
                ys.front(), ts.size() > 1 ? ts[1] - ts[0] : 1.0,
                xs.size() > 1 ? xs[1] - xs[0] : 1.0,
                ys.size() > 1 ? ys[1] - ys[0] : 1.0};
  GridWave g(std::move(model), spec);
  auto locate = [](const std::vector<double>& ax, double v) {
    const auto it = std::lower_bound(ax.begin(), ax.end(), v - 1e-12);
    return static_cast<int>(it - ax.begin());
  };
  for (const auto& r : rows) {
    const int it = locate(ts, r[0]), ix = locate(xs, r[1]), iy = locate(ys, r[2]);
    g.psi(it, ix, iy) = {r[3], r[4]};
    g.psi_lower(0, it, ix, iy) = {r[5], r[6]};
    g.psi_lower(1, it, ix, iy) = {r[7], r[8]};
  }
  return g;
}

// ---------------------------------------------------------------------
// Conservation law on the grid
// ---------------------------------------------------------------------
double conservation_residual(const GridWave& w, Exec exec) {
  const GridSpec& s = w.spec();
  if (s.nt < 5 || s.nx < 5 || s.ny < 5)
    throw InvalidDomain("conservation_residual: need >= 5 points per axis");
  const QuantumModel& m = w.model();
  const double g0 = m.metric().sign(0), g1 = m.metric().sign(1);
  const double hk = m.hk();

  // fluxes: T^mu = conj(psi) psi^mu + psi conj(psi^mu),
  // FY = conj(psi) <-> psi + sum_mu g^mumu conj(psi_mu) <-> psi_mu
  const auto T = [&](int mu, int it, int ix, int iy) {
    const cplx p = w.psi(it, ix, iy);
    const cplx pm = w.psi_lower(mu, it, ix, iy) * (mu == 0 ? g0 : g1);
    return std::conj(p) * pm + p * std::conj(pm);
  };
  const auto FY = [&](int it, int ix, int iy) {
    auto d_y = [&](auto&& field) {
      return (field(it, ix, iy + 1) - field(it, ix, iy - 1)) / (2.0 * s.dy);
    };
    const cplx p = w.psi(it, ix, iy);
    const cplx dp = d_y([&](int a, int b, int c) { return w.psi(a, b, c); });
    cplx acc = std::conj(p) * dp - std::conj(dp) * p;
    for (int mu = 0; mu < 2; ++mu) {
      const double g = (mu == 0) ? g0 : g1;
      const cplx pm = w.psi_lower(mu, it, ix, iy);
      const cplx dpm =
          d_y([&](int a, int b, int c) { return w.psi_lower(mu, a, b, c); });
      acc += g * (std::conj(pm) * dpm - std::conj(dpm) * pm);
    }
    return acc;
  };

  const int nt = s.nt, nx = s.nx, ny = s.ny;
  const std::size_t count = static_cast<std::size_t>(nt - 2) *
                            static_cast<std::size_t>(nx - 2) *
                            static_cast<std::size_t>(ny - 4);
  return parallel_max(exec, count, [&](std::size_t flat) {
    const int span_y = ny - 4;
    const int iy = 2 + static_cast<int>(flat % static_cast<std::size_t>(span_y));
    const std::size_t rest = flat / static_cast<std::size_t>(span_y);
    const int ix = 1 + static_cast<int>(rest % static_cast<std::size_t>(nx - 2));
    const int it = 1 + static_cast<int>(rest / static_cast<std::size_t>(nx - 2));
    const cplx dT0 = (T(0, it + 1, ix, iy) - T(0, it - 1, ix, iy)) / (2.0 * s.dt);
    const cplx dT1 = (T(1, it, ix + 1, iy) - T(1, it, ix - 1, iy)) / (2.0 * s.dx);
    const cplx dFY = (FY(it, ix, iy + 1) - FY(it, ix, iy - 1)) / (2.0 * s.dy);
    return std::abs(dT0 + dT1 - 0.5 * I * hk * dFY);
  });
}

ConvergenceStudy conservation_convergence(const AnalyticWave& wave,
                                          const GridSpec& base, int levels,
                                          Exec exec) {
  if (levels < 2)
    throw InvalidParameter("conservation_convergence: need >= 2 levels");
  ConvergenceStudy out;
  GridSpec spec = base;
  for (int lvl = 0; lvl < levels; ++lvl) {
    if (lvl > 0) {
      spec.nt = 2 * (spec.nt - 1) + 1;
      spec.nx = 2 * (spec.nx - 1) + 1;
      spec.ny = 2 * (spec.ny - 1) + 1;
      spec.dt *= 0.5;
      spec.dx *= 0.5;
      spec.dy *= 0.5;
    }
    GridWave g = GridWave::sample(wave, spec);
    out.spacing.push_back(spec.dt);
    out.residual.push_back(conservation_residual(g, exec));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < out.residual.size(); ++i)
    acc += std::log2(out.residual[i] / out.residual[i + 1]);
  out.order = acc / static_cast<double>(out.residual.size() - 1);
  return out;
}

std::vector<SchrodingerPointResidual> schrodinger_residual_grid(
    const GridWave& w, Exec exec) {
  const GridSpec& s = w.spec();
  if (s.nt < 3 || s.nx < 3 || s.ny < 3)
    throw InvalidDomain("schrodinger_residual_grid: need >= 3 points per axis");
  const QuantumModel& m = w.model();
  const double g0 = m.metric().sign(0), g1 = m.metric().sign(1);
  const double hk = m.hk();
  const double hk2 = hk * hk;

  const int nt = s.nt, nx = s.nx, ny = s.ny;
  const std::size_t count = static_cast<std::size_t>(nt - 2) *
                            static_cast<std::size_t>(nx - 2) *
                            static_cast<std::size_t>(ny - 2);
  std::vector<SchrodingerPointResidual> out(count);
  parallel_for(exec, count, [&](std::size_t flat) {
    const int iy = 1 + static_cast<int>(flat % static_cast<std::size_t>(ny - 2));
    const std::size_t rest = flat / static_cast<std::size_t>(ny - 2);
    const int ix = 1 + static_cast<int>(rest % static_cast<std::size_t>(nx - 2));
    const int it = 1 + static_cast<int>(rest / static_cast<std::size_t>(nx - 2));
    const double y = s.y0 + iy * s.dy;
    auto Hof = [&](auto&& field) {
      const cplx dd = (field(it, ix, iy + 1) - 2.0 * field(it, ix, iy) +
                       field(it, ix, iy - 1)) /
                      (s.dy * s.dy);
      return -0.5 * hk2 * dd + m.V(y) * field(it, ix, iy);
    };
    auto psi_at = [&](int a, int b, int c) { return w.psi(a, b, c); };
    auto p0_at = [&](int a, int b, int c) { return w.psi_lower(0, a, b, c); };
    auto p1_at = [&](int a, int b, int c) { return w.psi_lower(1, a, b, c); };

    const cplx dpsi0_dt = (p0_at(it + 1, ix, iy) - p0_at(it - 1, ix, iy)) / (2.0 * s.dt);
    const cplx dpsi1_dx = (p1_at(it, ix + 1, iy) - p1_at(it, ix - 1, iy)) / (2.0 * s.dx);
    const cplx div = g0 * dpsi0_dt + g1 * dpsi1_dx;
    const double scalar_eq = std::abs(I * hk * div - Hof(psi_at));

    const cplx dpsi_dt = (psi_at(it + 1, ix, iy) - psi_at(it - 1, ix, iy)) / (2.0 * s.dt);
    const cplx dpsi_dx = (psi_at(it, ix + 1, iy) - psi_at(it, ix - 1, iy)) / (2.0 * s.dx);
    const double v0 = std::abs(I * hk * dpsi_dt - Hof(p0_at));
    const double v1 = std::abs(I * hk * dpsi_dx - Hof(p1_at));
    out[flat] = {scalar_eq, std::max(v0, v1)};
  });
  return out;
}

std::vector<double> second_order_residual(
    const AnalyticWave& wave, std::span<const std::array<double, 3>> points,
    Exec exec) {
  const QuantumModel& m = wave.model();
  const double h2 = m.hbar() * m.hbar();
  const double ik2 = 1.0 / (m.kappa() * m.kappa());
  std::vector<double> out(points.size());
  parallel_for(exec, points.size(), [&](std::size_t i) {
    const auto [t, x, y] = points[i];
    out[i] = std::abs(h2 * wave.box_psi(t, x, y) + ik2 * wave.H2_psi(t, x, y));
  });
  return out;
}

// ---------------------------------------------------------------------
// WKB residuals
// ---------------------------------------------------------------------
namespace {

struct WKBEval {
  double classical;
  double qp;
  double side1;
  double side2;
  bool singular;
};

WKBEval eval_wkb_point(const QuantumModel& m, const WKBData& w, double hk,
                       double t, double x, double y) {
  WKBEval e{};
  double div = 0.0;
  for (int mu = 0; mu < 2; ++mu) div += w.dS_dx(mu, mu, t, x, y);
  double kin = 0.0;
  for (int mu = 0; mu < 2; ++mu) {
    const double d = w.dS_dy(mu, t, x, y);
    kin += 0.5 * m.metric().sign(mu) * d * d;
  }
  e.classical = div + (kin + m.V(y));
  const double R = w.R(t, x, y);
  e.qp = 0.5 * hk * hk * w.lap_R(t, x, y) / R;

  // side conditions need |S| = sqrt(S_mu S^mu)
  double s2 = 0.0;
  for (int mu = 0; mu < 2; ++mu) {
    const double Smu = w.S(mu, t, x, y);
    s2 += m.metric().sign(mu) * Smu * Smu;
  }
  if (s2 <= 0.0) {
    e.singular = true;
    e.side1 = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double norm = std::sqrt(s2);
    // d_mu |S| = (S_nu d_mu S^nu) / |S|
    double acc = 0.0;
    for (int mu = 0; mu < 2; ++mu) {
      double dnorm = 0.0;
      for (int nu = 0; nu < 2; ++nu)
        dnorm += m.metric().sign(nu) * w.S(nu, t, x, y) * w.dS_dx(nu, mu, t, x, y);
      dnorm /= norm;
      acc += w.S(mu, t, x, y) / norm * dnorm;
    }
    e.side1 = std::abs(div - acc);
  }
  double grad2 = 0.0;
  for (int mu = 0; mu < 2; ++mu) {
    const double d = w.dS_dy(mu, t, x, y);
    grad2 += m.metric().sign(mu) * d * d;
  }
  e.side2 = std::abs(grad2 - div);
  return e;
}

} // namespace

std::vector<WKBPointResidual> wkb_residual(
    const QuantumModel& m, const WKBData& w,
    std::span<const std::array<double, 3>> points, bool strict, Exec exec) {
  if (!w.S || !w.dS_dx || !w.dS_dy || !w.R || !w.lap_R)
    throw InvalidParameter("wkb_residual: incomplete WKB data");
  std::vector<WKBPointResidual> out(points.size());
  parallel_for(exec, points.size(), [&](std::size_t i) {
    const auto [t, x, y] = points[i];
    const WKBEval e = eval_wkb_point(m, w, m.hk(), t, x, y);
    out[i] = {std::abs(e.classical - e.qp), e.side1, e.side2, e.singular};
  });
  if (strict)
    for (const auto& r : out)
      if (r.singular)
        throw SingularHJNorm("wkb_residual: |S| vanished at a sample point");
  return out;
}

std::vector<double> wkb_classical_residual(
    const QuantumModel& m, const WKBData& w,
    std::span<const std::array<double, 3>> points, Exec exec) {
  std::vector<double> out(points.size());
  parallel_for(exec, points.size(), [&](std::size_t i) {
    const auto [t, x, y] = points[i];
    const WKBEval e = eval_wkb_point(m, w, m.hk(), t, x, y);
    out[i] = std::abs(e.classical - 0.0);
  });
  return out;
}

WKBData ground_state_wkb(const QuantumModel& m) {
  if (!m.quadratic_default())
    throw InvalidParameter("ground_state_wkb: needs the quadratic potential");
  const double chi0 = chi_closed_form(m, 0);
  const double alpha = m.mass() / (2.0 * m.kappa() * m.hbar() * m.hbar());
  WKBData w;
  w.S = [chi0](int mu, double t, double, double) {
    return mu == 0 ? -chi0 * t : 0.0;
  };
  w.dS_dx = [chi0](int mu, int nu, double, double, double) {
    return (mu == 0 && nu == 0) ? -chi0 : 0.0;
  };
  w.dS_dy = [](int, double, double, double) { return 0.0; };
  w.R = [alpha](double, double, double y) { return std::exp(-alpha * y * y); };
  w.lap_R = [alpha](double, double, double y) {
    return (4.0 * alpha * alpha * y * y - 2.0 * alpha) * std::exp(-alpha * y * y);
  };
  return w;
}

HkSweep wkb_hk_sweep(const QuantumModel& m, const WKBData& w,
                     std::span<const std::array<double, 3>> points,
                     std::span<const double> scales) {
  HkSweep out;
  for (double lam : scales) {
    if (!(lam > 0)) throw InvalidParameter("wkb_hk_sweep: scale <= 0");
    double worst = 0.0;
    for (const auto& [t, x, y] : points) {
      const WKBEval e = eval_wkb_point(m, w, lam * m.hk(), t, x, y);
      worst = std::max(worst, std::abs(e.qp));
    }
    out.scale.push_back(lam);
    out.quantum_term.push_back(worst);
  }
  // least-squares slope in log-log
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto npt = static_cast<double>(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double lx = std::log(out.scale[i]);
    const double ly = std::log(out.quantum_term[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.fitted_exponent = (npt * sxy - sx * sy) / (npt * sxx - sx * sx);
  return out;
}

// ---------------------------------------------------------------------
// Exponential decomposition
// ---------------------------------------------------------------------
WKBPointExtract extract_wkb_point(const QuantumModel& m, cplx psi,
                                  std::span<const cplx> psi_lower,
                                  double tol) {
  const Metric& g = m.metric();
  const int n = g.dim();
  const double hk = m.hk();

  std::vector<cplx> psi_up(static_cast<std::size_t>(n));
  double scale = std::abs(psi);
  cplx B = 0.0;
  for (int mu = 0; mu < n; ++mu) {
    psi_up[static_cast<std::size_t>(mu)] =
        static_cast<double>(g.sign(mu)) * psi_lower[static_cast<std::size_t>(mu)];
    B += static_cast<double>(g.sign(mu)) * psi_lower[static_cast<std::size_t>(mu)] *
         psi_lower[static_cast<std::size_t>(mu)];
    scale = std::max(scale, std::abs(psi_lower[static_cast<std::size_t>(mu)]));
  }
  const cplx D2 = psi * psi - B;
  if (std::abs(D2) < 1e-12 * scale * scale)
    throw DecompositionFailure(
        "extract_wkb: data on the null cone psi^2 = psi_mu psi^mu");

  cplx R = std::sqrt(D2);
  if (R.real() < 0 || (R.real() == 0 && R.imag() < 0)) R = -R;

  WKBPointExtract out;
  out.R = R;
  out.S_upper.assign(static_cast<std::size_t>(n), 0.0);

  double vec_norm = 0.0;
  for (const cplx& c : psi_lower) vec_norm = std::max(vec_norm, std::abs(c));
  if (vec_norm < 1e-14 * std::max(scale, 1.0)) {
    // pure scalar: only R > 0 with S = 0 is representable
    if (std::abs(psi.imag()) > 1e-14 * std::max(scale, 1.0) || psi.real() <= 0)
      throw DecompositionFailure(
          "extract_wkb: scalar with complex phase has no R exp(iS) form");
    out.R = psi;
    return out;
  }

  const cplx theta = std::acos(psi / R);
  const cplx s = hk * theta;
  const cplx sn = std::sin(theta);
  if (std::abs(sn) < 1e-14)
    throw DecompositionFailure("extract_wkb: vanishing sine branch");
  for (int mu = 0; mu < n; ++mu)
    out.S_upper[static_cast<std::size_t>(mu)] =
        psi_up[static_cast<std::size_t>(mu)] * s / (I * R * sn);

  // verify by series reassembly; the gamma_mu blade carries psi^mu
  Multivector A(g);
  for (int mu = 0; mu < n; ++mu) {
    Multivector gamma_mu = Multivector::generator(g, mu);
    A = A + gamma_mu * (I * out.S_upper[static_cast<std::size_t>(mu)] / hk);
  }
  Multivector re = clifford::mv_exp(A, 1e-13) * out.R;
  double err = std::abs(re[0] - psi);
  for (int mu = 0; mu < n; ++mu)
    err = std::max(err, std::abs(re[std::uint32_t{1} << mu] -
                                 psi_up[static_cast<std::size_t>(mu)]));
  if (err > tol * std::max(1.0, scale))
    throw DecompositionFailure("extract_wkb: reassembly mismatch " +
                               std::to_string(err));
  return out;
}

std::vector<WKBPointExtract> extract_wkb(
    const AnalyticWave& wave, std::span<const std::array<double, 3>> points,
    double tol) {
  std::vector<WKBPointExtract> out;
  out.reserve(points.size());
  for (const auto& [t, x, y] : points) {
    std::vector<cplx> lower{wave.psi_lower(0, t, x, y),
                            wave.psi_lower(1, t, x, y)};
    out.push_back(extract_wkb_point(wave.model(), wave.psi(t, x, y), lower, tol));
  }
  return out;
}

} // namespace dwq::quantum
