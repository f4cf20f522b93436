#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "dwq/dwmech.hpp"
#include "dwq/quantum.hpp"

using namespace dwq;
using namespace dwq::quantum;

namespace {

std::vector<std::array<double, 3>> sample_points(std::mt19937_64& rng,
                                                 int count, double tmin = -1.5,
                                                 double tmax = 1.5) {
  std::uniform_real_distribution<double> ut(tmin, tmax), uy(-2.5, 2.5);
  std::vector<std::array<double, 3>> pts;
  for (int i = 0; i < count; ++i)
    pts.push_back({ut(rng), ut(rng), uy(rng)});
  return pts;
}

} // namespace

TEST_CASE("DW Hamiltonian application") {
  auto m = QuantumModel::free_field();
  // Gaussian ground profile: H f = (kappa m / 2) f
  {
    const double ell = m.ell();
    auto f = [&](double y) { return std::exp(-y * y / (2 * ell * ell)); };
    auto ddf = [&](double y) {
      return (y * y / std::pow(ell, 4) - 1.0 / (ell * ell)) * f(y);
    };
    for (double y : {-1.7, -0.3, 0.0, 0.8, 2.1}) {
      const double lhs = apply_dw_hamiltonian(m, f(y), ddf(y), y);
      CHECK(lhs == doctest::Approx(0.5 * m.kappa() * m.mass() * f(y))
                       .epsilon(1e-12));
    }
  }
  // f = const, V = 0 -> 0
  {
    QuantumModel free_v0(clifford::Metric::minkowski(2), 1.0, 1.0, 1.0, {0.0});
    CHECK(apply_dw_hamiltonian(free_v0, 1.0, 0.0, 0.7) == 0.0);
  }
  // random smooth profile: grid stencil vs spectral application, 1e-8
  {
    auto f = [](double y) {
      return (0.3 + y - 0.2 * y * y * y) * std::exp(-0.5 * y * y);
    };
    // exact second derivative for the oracle
    auto df = [](double y) {
      return (1.0 - 0.6 * y * y) * std::exp(-0.5 * y * y) -
             y * (0.3 + y - 0.2 * y * y * y) * std::exp(-0.5 * y * y);
    };
    auto ddf = [&](double y) {
      const double g = std::exp(-0.5 * y * y);
      const double p = 0.3 + y - 0.2 * y * y * y;
      const double dp = 1.0 - 0.6 * y * y;
      const double d2p = -1.2 * y;
      return (d2p - 2.0 * y * dp + (y * y - 1.0) * p) * g;
    };
    (void)df;
    SpectralFunction sf = spectral_project(m, f, 60);
    SpectralFunction Hf = apply_dw_hamiltonian_spectral(m, sf);
    for (double y : {-2.1, -0.7, 0.0, 0.4, 1.3, 2.2}) {
      const double exact = apply_dw_hamiltonian(m, f(y), ddf(y), y);
      CHECK(std::abs(Hf(y) - exact) < 1e-10);
      const double fd = apply_dw_hamiltonian_fd(m, f, y, 5e-3);
      CHECK(std::abs(fd - exact) < 1e-8);
      CHECK(std::abs(Hf(y) - fd) < 1e-8);
    }
    // plain grid application is second order
    const double y0 = -6.0;
    std::vector<double> dys{1e-2, 5e-3};
    std::vector<double> errs;
    for (double dy : dys) {
      const int npt = static_cast<int>(std::round(12.0 / dy)) + 1;
      std::vector<double> fv(static_cast<std::size_t>(npt));
      for (int i = 0; i < npt; ++i) fv[static_cast<std::size_t>(i)] = f(y0 + i * dy);
      auto Hg = apply_dw_hamiltonian_grid(m, fv, y0, dy);
      double worst = 0.0;
      for (int i = npt / 4; i < 3 * npt / 4; ++i) {
        const double y = y0 + i * dy;
        worst = std::max(worst, std::abs(Hg[static_cast<std::size_t>(i)] -
                                         apply_dw_hamiltonian(m, f(y), ddf(y), y)));
      }
      errs.push_back(worst);
    }
    CHECK(std::log2(errs[0] / errs[1]) == doctest::Approx(2.0).epsilon(0.1));
  }
  CHECK_THROWS_AS(
      apply_dw_hamiltonian_grid(m, std::vector<double>{1.0, 2.0}, 0.0, 0.1),
      InvalidDomain);
  CHECK_THROWS_AS(apply_dw_hamiltonian_fd(m, [](double) { return 0.0; }, 0.0, -1.0),
                  InvalidParameter);
}

TEST_CASE("spectrum of the free field") {
  auto m = QuantumModel::free_field();
  auto sol = eigensolve(m, 10);
  REQUIRE(sol.pairs.size() == 11);
  // chi_0 = 0.5, chi_3 = 3.5
  CHECK(sol.pairs[0].chi == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sol.pairs[3].chi == doctest::Approx(3.5).epsilon(1e-12));
  for (int N = 0; N <= 10; ++N)
    CHECK(std::abs(sol.pairs[static_cast<std::size_t>(N)].chi /
                       (m.kappa() * m.mass()) -
                   (N + 0.5)) < 1e-8);
  CHECK(sol.max_matrix_residual < 1e-8);

  // eigenfunctions match the closed-form oscillator profiles
  for (int N : {0, 1, 4}) {
    for (double y : {-1.3, 0.2, 0.9}) {
      CHECK(sol.pairs[static_cast<std::size_t>(N)].f(y) ==
            doctest::Approx(mode_function(m, N, y)).epsilon(1e-9));
    }
  }

  // FD oracle at 2000 grid points: 1e-4 relative agreement
  auto fd = eigensolve_fd(m, 10, 2000);
  for (int N = 0; N <= 10; ++N) {
    const double chi = sol.pairs[static_cast<std::size_t>(N)].chi;
    CHECK(std::abs(chi - fd[static_cast<std::size_t>(N)]) / chi < 1e-4);
  }
  // refined oracle: 1e-6 relative
  auto fd2 = eigensolve_fd(m, 10, 20000);
  for (int N = 0; N <= 10; ++N) {
    const double chi = sol.pairs[static_cast<std::size_t>(N)].chi;
    CHECK(std::abs(chi - fd2[static_cast<std::size_t>(N)]) / chi < 1e-6);
  }
}

TEST_CASE("particle in a box from the numeric path") {
  // V = 0 on a finite box: chi_n = hbar^2 kappa^2 (n+1)^2 pi^2 / (8 L^2)
  QuantumModel m(clifford::Metric::minkowski(2), 1.0, 1.0, 1.0, {0.0});
  const double L = 4.0; // half width in ell units (ell = 1 here)
  auto fd = eigensolve_fd(m, 5, 4000, L);
  for (int n = 0; n <= 5; ++n) {
    const double exact = std::pow((n + 1) * std::numbers::pi, 2) / (8.0 * L * L);
    CHECK(std::abs(fd[static_cast<std::size_t>(n)] - exact) / exact < 1e-4);
  }
}

TEST_CASE("anharmonic potential converges with certification") {
  // V = y^2/2 + 0.1 y^4
  QuantumModel m(clifford::Metric::minkowski(2), 1.0, 1.0, 1.0,
                 {0.0, 0.0, 0.5, 0.0, 0.1});
  auto sol = eigensolve(m, 4);
  CHECK(sol.max_matrix_residual < 1e-8);
  auto fd = eigensolve_fd(m, 4, 4000);
  for (int N = 0; N <= 4; ++N)
    CHECK(std::abs(sol.pairs[static_cast<std::size_t>(N)].chi -
                   fd[static_cast<std::size_t>(N)]) /
              sol.pairs[static_cast<std::size_t>(N)].chi <
          1e-4);
}

TEST_CASE("assembled modes: dispersion and residuals") {
  auto m = QuantumModel::free_field();
  // ground-state dispersion: w0^2 - k^2 = (m / 2 hbar)^2 to machine precision
  for (double k : {0.0, 0.3, 1.1, 2.5}) {
    auto ms = mode_params(m, 0, k);
    CHECK(std::abs(ms.omega * ms.omega - k * k - 0.25) <
          1e-13 * std::max(1.0, k * k));
  }
  // k=0 rest frame: w0 = m / 2 hbar
  CHECK(mode_params(m, 0, 0.0).omega == doctest::Approx(0.5).epsilon(1e-15));

  std::mt19937_64 rng(3);
  auto pts = sample_points(rng, 40);
  // separated solutions satisfy the component system
  for (auto [N, k] : std::vector<std::pair<int, double>>{{0, 0.7}, {2, -1.1}}) {
    auto wave = assemble_mode(m, N, k);
    for (const auto& r : schrodinger_residual(wave, pts)) {
      CHECK(r.scalar_eq < 1e-8);
      CHECK(r.vector_eq < 1e-8);
    }
  }
  // zero wave: residual 0
  {
    AnalyticWave zero(m, {});
    for (const auto& r : schrodinger_residual(zero, pts)) {
      CHECK(r.scalar_eq == 0.0);
      CHECK(r.vector_eq == 0.0);
    }
  }
  // negative control: wrong omega
  {
    const auto ms = mode_params(m, 0, 0.7);
    auto bad = detuned_mode(m, 0, 0.7, ms.omega + 0.3);
    double worst = 0.0;
    for (const auto& r : schrodinger_residual(bad, pts))
      worst = std::max(worst, r.scalar_eq);
    double psi_scale = 0.0;
    for (const auto& p : pts)
      psi_scale = std::max(psi_scale, std::abs(bad.psi(p[0], p[1], p[2])));
    CHECK(worst > 0.3 * psi_scale * 0.5);
  }
  CHECK_THROWS_AS(mode_params(m, -1, 0.0), InvalidParameter);
}

TEST_CASE("kappa cancels in the spacetime behavior") {
  const double mass = 1.0, hbar = 1.0;
  auto m1 = QuantumModel::free_field(mass, hbar, 1.0);
  auto m2 = QuantumModel::free_field(mass, hbar, 2.0); // exact power-of-two scaling
  for (int N : {0, 1, 3}) {
    for (double k : {0.0, 0.8, -1.3}) {
      auto a = mode_params(m1, N, k);
      auto b = mode_params(m2, N, k);
      CHECK(a.omega == b.omega); // bitwise
      CHECK(b.chi == 2.0 * a.chi);
      // the component ratio i hbar kappa / chi is kappa-free
      auto wa = assemble_mode(m1, N, k);
      auto wb = assemble_mode(m2, N, k);
      const double t = 0.4, x = -0.3, y = 0.8;
      CHECK(wa.psi_lower(0, t, x, y) == wb.psi_lower(0, t, x, y));
      CHECK(wa.psi_lower(1, t, x, y) == wb.psi_lower(1, t, x, y));
    }
  }
}

TEST_CASE("gamma form of the residual matches the component system") {
  auto m = QuantumModel::free_field();
  std::mt19937_64 rng(11);
  auto pts = sample_points(rng, 15);
  const auto ms = mode_params(m, 1, 0.9);
  auto wave = detuned_mode(m, 1, 0.9, ms.omega + 0.4); // nonzero residuals
  const double hk = m.hk();
  for (const auto& [t, x, y] : pts) {
    auto R = gamma_form_residual(wave, t, x, y);
    // grade 0: i hk d_i psi^i - H psi
    cplx div = 0.0;
    for (int mu = 0; mu < 2; ++mu)
      div += static_cast<double>(m.metric().sign(mu)) *
             wave.dpsi_lower(mu, mu, t, x, y);
    const cplx scalar_eq = cplx(0, 1) * hk * div - wave.H_psi(t, x, y);
    CHECK(std::abs(R[0] - scalar_eq) < 1e-12);
    // grade 1 on gamma_mu: carries the raised component residual
    for (int mu = 0; mu < 2; ++mu) {
      const cplx vec_eq = cplx(0, 1) * hk * wave.dpsi(mu, t, x, y) -
                          wave.H_psi_lower(mu, t, x, y);
      const cplx expect = static_cast<double>(m.metric().sign(mu)) * vec_eq;
      CHECK(std::abs(R[std::uint32_t{1} << mu] - expect) < 1e-12);
    }
    // gradient-type vector part: grade 2 vanishes
    CHECK(std::abs(R[0b11]) < 1e-12);
  }
}

TEST_CASE("n=1 reduction is the single-time Schroedinger operator") {
  clifford::Metric g({1});
  const double hk = 0.7;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const cplx psi{u(rng), u(rng)}, psi0{u(rng), u(rng)};
    const cplx dpsi{u(rng), u(rng)}, dpsi0{u(rng), u(rng)};
    const cplx Hpsi{u(rng), u(rng)}, Hpsi0{u(rng), u(rng)};
    std::vector<cplx> lower{psi0}, dps{dpsi}, dlow{dpsi0}, Hlow{Hpsi0};
    auto R = gamma_form_residual(g, hk, psi, lower, dps, dlow, Hpsi, Hlow);
    CHECK(std::abs(R[0] - (cplx(0, 1) * hk * dpsi0 - Hpsi)) < 1e-14);
    CHECK(std::abs(R[1] - (cplx(0, 1) * hk * dpsi - Hpsi0)) < 1e-14);
  }
}

TEST_CASE("conservation law on grids") {
  auto m = QuantumModel::free_field();

  // single separated solution: both sides vanish identically, only
  // roundoff remains
  {
    auto wave = assemble_mode(m, 0, 0.6);
    GridSpec spec{9, 9, 33, 0.0, 0.0, -6.0, 0.1, 0.1, 0.375};
    auto g = GridWave::sample(wave, spec);
    CHECK(conservation_residual(g) < 1e-12);
  }

  // real static wave: both sides are exactly zero
  {
    GridSpec spec{7, 7, 9, 0.0, 0.0, -2.0, 0.1, 0.1, 0.5};
    GridWave g(m, spec);
    for (int it = 0; it < spec.nt; ++it)
      for (int ix = 0; ix < spec.nx; ++ix)
        for (int iy = 0; iy < spec.ny; ++iy) {
          const double y = spec.y0 + iy * spec.dy;
          g.psi(it, ix, iy) = std::exp(-y * y);
          g.psi_lower(0, it, ix, iy) = 0.3 * std::exp(-y * y);
          g.psi_lower(1, it, ix, iy) = -0.2 * std::exp(-y * y);
        }
    CHECK(conservation_residual(g) == 0.0);
  }

  // superposition: discretization error dominates and converges at order 2
  {
    std::vector<ModeSpec> specs{{cplx{1.0, 0.0}, 0, 0.6},
                                {cplx{0.7, 0.2}, 1, -0.9}};
    auto wave = superpose(m, specs);
    GridSpec base{9, 9, 33, 0.0, 0.0, -6.0, 0.1, 0.1, 0.375};
    auto study = conservation_convergence(wave, base, 4);
    CHECK(study.order == doctest::Approx(2.0).epsilon(0.05));
    // the law itself holds: residuals shrink under refinement
    CHECK(study.residual.back() < study.residual.front() / 30.0);
  }

  // too coarse
  {
    auto wave = assemble_mode(m, 0, 0.5);
    GridSpec spec{3, 9, 9, 0.0, 0.0, -2.0, 0.1, 0.1, 0.5};
    auto g = GridWave::sample(wave, spec);
    CHECK_THROWS_AS(conservation_residual(g), InvalidDomain);
  }
}

TEST_CASE("grid Schroedinger residual is second order") {
  auto m = QuantumModel::free_field();
  auto wave = assemble_mode(m, 1, 0.8);
  std::vector<double> errs;
  GridSpec spec{9, 9, 33, 0.0, 0.0, -6.0, 0.1, 0.1, 0.375};
  for (int lvl = 0; lvl < 3; ++lvl) {
    if (lvl > 0) {
      spec.nt = 2 * (spec.nt - 1) + 1;
      spec.nx = 2 * (spec.nx - 1) + 1;
      spec.ny = 2 * (spec.ny - 1) + 1;
      spec.dt *= 0.5;
      spec.dx *= 0.5;
      spec.dy *= 0.5;
    }
    auto g = GridWave::sample(wave, spec);
    double worst = 0.0;
    for (const auto& r : schrodinger_residual_grid(g))
      worst = std::max(worst, std::max(r.scalar_eq, r.vector_eq));
    errs.push_back(worst);
  }
  CHECK(std::log2(errs[0] / errs[1]) == doctest::Approx(2.0).epsilon(0.08));
  CHECK(std::log2(errs[1] / errs[2]) == doctest::Approx(2.0).epsilon(0.08));
}

TEST_CASE("second-order consequence") {
  auto m = QuantumModel::free_field();
  std::mt19937_64 rng(17);
  auto pts = sample_points(rng, 30);
  // scalar part of assembled modes: residual < 1e-8
  for (auto [N, k] : std::vector<std::pair<int, double>>{{0, 0.0}, {1, 1.2}}) {
    auto wave = assemble_mode(m, N, k);
    for (double r : second_order_residual(wave, pts)) CHECK(r < 1e-8);
  }
  // psi = 0
  {
    AnalyticWave zero(m, {});
    for (double r : second_order_residual(zero, pts)) CHECK(r == 0.0);
  }
  // plane wave with a non-eigen y-profile: mixed chi spoils the identity
  {
    const auto ms = mode_params(m, 0, 0.7);
    std::vector<WaveTerm> terms;
    auto w0 = assemble_mode(m, 0, 0.7).terms()[0];
    auto w2 = assemble_mode(m, 2, 0.7).terms()[0];
    w2.omega = ms.omega; // share the N=0 dispersion
    w2.amp = 0.5;
    terms.push_back(w0);
    terms.push_back(w2);
    AnalyticWave bad(m, terms);
    double worst = 0.0;
    for (double r : second_order_residual(bad, pts)) worst = std::max(worst, r);
    CHECK(worst > 1e-2);
  }
}

TEST_CASE("grid wave CSV round trip") {
  auto m = QuantumModel::free_field();
  auto wave = assemble_mode(m, 1, 0.4);
  GridSpec spec{5, 6, 7, -0.2, 0.0, -1.5, 0.1, 0.2, 0.5};
  auto g = GridWave::sample(wave, spec);
  const char* path = "test_wave.csv";
  g.save_csv(path);
  auto h = GridWave::load_csv(m, path);
  REQUIRE(h.spec().nt == spec.nt);
  REQUIRE(h.spec().ny == spec.ny);
  double worst = 0.0;
  for (int it = 0; it < spec.nt; ++it)
    for (int ix = 0; ix < spec.nx; ++ix)
      for (int iy = 0; iy < spec.ny; ++iy) {
        worst = std::max(worst, std::abs(g.psi(it, ix, iy) - h.psi(it, ix, iy)));
        for (int mu = 0; mu < 2; ++mu)
          worst = std::max(worst, std::abs(g.psi_lower(mu, it, ix, iy) -
                                           h.psi_lower(mu, it, ix, iy)));
      }
  CHECK(worst < 1e-15);
  std::remove(path);
}

TEST_CASE("WKB residuals") {
  auto m = QuantumModel::free_field();
  auto w = ground_state_wkb(m);
  // t away from 0 keeps |S| regular
  std::vector<std::array<double, 3>> pts;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ut(0.2, 1.8), uy(-2.0, 2.0);
  for (int i = 0; i < 30; ++i) pts.push_back({ut(rng), 0.3, uy(rng)});

  // the quasiclassical expansion of the lowest mode closes exactly
  auto res = wkb_residual(m, w, pts);
  for (const auto& r : res) {
    CHECK(r.main < 1e-12);
    CHECK(r.side1 < 1e-12);
    CHECK(!r.singular);
    // side2 = |0 - d_i S^i| = chi_0
    CHECK(r.side2 == doctest::Approx(0.5).epsilon(1e-12));
  }

  // R constant: main residual IS the classical DWHJ residual, bitwise
  {
    WKBData flat = w;
    flat.R = [](double, double, double) { return 1.0; };
    flat.lap_R = [](double, double, double) { return 0.0; };
    auto full = wkb_residual(m, flat, pts);
    auto classical = wkb_classical_residual(m, flat, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      CHECK(full[i].main == classical[i]);
  }

  // cross-check against the independent DWHJ evaluator: the classical
  // residual of the ground-state data equals the quantum potential
  {
    using namespace dwq::dwmech;
    PhaseContext ctx(2, 1);
    ScalarModel sm(clifford::Metric::minkowski(2), 1,
                   quadratic_potential(ctx, m.mass(), m.hbar()));
    HJFunctions hj;
    hj.S = [&](int i, std::span<const double> x, std::span<const double> y) {
      return w.S(i, x[0], x[1], y[0]);
    };
    hj.dS_dx = [&](int i, int k, std::span<const double> x,
                   std::span<const double> y) {
      return w.dS_dx(i, k, x[0], x[1], y[0]);
    };
    hj.dS_dy = [&](int i, int, std::span<const double> x,
                   std::span<const double> y) {
      return w.dS_dy(i, x[0], x[1], y[0]);
    };
    std::vector<std::vector<double>> hj_pts;
    for (const auto& p : pts) hj_pts.push_back({p[0], p[1], p[2]});
    auto dwhj = dwhj_residual(sm, hj, hj_pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double y = pts[i][2];
      const double qp = std::abs(m.V(y) - 0.5); // quantum potential term
      CHECK(dwhj[i] == doctest::Approx(qp).epsilon(1e-12));
    }
  }

  // hbar kappa sweep: the quantum term scales exactly quadratically
  {
    std::vector<double> scales{1.0, 0.5, 0.25, 0.125, 0.0625};
    auto sweep = wkb_hk_sweep(m, w, pts, scales);
    CHECK(sweep.fitted_exponent == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sweep.quantum_term[1] == doctest::Approx(sweep.quantum_term[0] / 4.0)
                                       .epsilon(1e-12));
  }

  // singular |S| at t = 0
  {
    std::vector<std::array<double, 3>> sing{{0.0, 0.0, 0.5}};
    CHECK_THROWS_AS(wkb_residual(m, w, sing), SingularHJNorm);
    auto soft = wkb_residual(m, w, sing, false);
    CHECK(soft[0].singular);
  }
}

TEST_CASE("exponential decomposition of scalar+vector data") {
  auto m = QuantumModel::free_field();
  const double hk = m.hk();

  // pure time-axis exponent: S^0 = theta hbar kappa, R = R0
  {
    const double theta = 0.7, R0 = 1.3;
    const cplx psi = R0 * std::cos(theta);
    std::vector<cplx> lower{cplx(0, 1) * R0 * std::sin(theta), 0.0};
    auto ex = extract_wkb_point(m, psi, lower);
    CHECK(std::abs(ex.R - R0) < 1e-12);
    CHECK(std::abs(ex.S_upper[0] - hk * theta) < 1e-12);
    CHECK(std::abs(ex.S_upper[1]) < 1e-12);
  }

  // random real (R, S) with timelike S: exact round trip
  {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> uS0(1.2, 2.0), uS1(-0.5, 0.5),
        uR(0.4, 2.0);
    for (int rep = 0; rep < 25; ++rep) {
      const double S0 = uS0(rng), S1 = uS1(rng), R0 = uR(rng);
      // Psi = R exp(i S^mu gamma_mu / hk), built by the series
      clifford::Multivector A(m.metric());
      A = A + clifford::Multivector::generator(m.metric(), 0) * (cplx(0, 1) * S0 / hk);
      A = A + clifford::Multivector::generator(m.metric(), 1) * (cplx(0, 1) * S1 / hk);
      auto Psi = clifford::mv_exp(A, 1e-14) * cplx(R0, 0.0);
      const cplx psi = Psi[0];
      // stored lower components: psi_mu = g_mumu psi^mu
      std::vector<cplx> lower{Psi[1], -Psi[2]};
      auto ex = extract_wkb_point(m, psi, lower);
      CHECK(std::abs(ex.R - R0) < 1e-8);
      CHECK(std::abs(ex.S_upper[0] - S0) < 1e-8);
      CHECK(std::abs(ex.S_upper[1] - S1) < 1e-8);
    }
  }

  // superpositions decompose and reassemble within 1e-8
  {
    std::vector<ModeSpec> specs{{cplx{1.0, 0.0}, 0, 0.6},
                                {cplx{0.7, 0.2}, 1, -0.9}};
    auto wave = superpose(m, specs);
    std::mt19937_64 rng(31);
    auto pts = sample_points(rng, 10, 0.1, 0.9);
    auto ex = extract_wkb(wave, pts); // throws on reassembly failure
    CHECK(ex.size() == pts.size());
  }

  // a single separated solution sits on the null cone: not decomposable
  {
    auto wave = assemble_mode(m, 0, 0.8);
    const double t = 0.3, x = 0.1, y = 0.5;
    std::vector<cplx> lower{wave.psi_lower(0, t, x, y),
                            wave.psi_lower(1, t, x, y)};
    CHECK_THROWS_AS(extract_wkb_point(m, wave.psi(t, x, y), lower),
                    DecompositionFailure);
  }

  // complex scalar with zero vector part has no R > 0 branch
  {
    std::vector<cplx> lower{0.0, 0.0};
    CHECK_THROWS_AS(extract_wkb_point(m, std::polar(1.0, 0.4), lower),
                    DecompositionFailure);
    // positive real scalar is the trivial branch
    auto ex = extract_wkb_point(m, cplx(1.7, 0.0), lower);
    CHECK(std::abs(ex.R - 1.7) < 1e-14);
    CHECK(std::abs(ex.S_upper[0]) == 0.0);
  }
}

TEST_CASE("serial and openmp agree exactly on quantum kernels") {
  auto m = QuantumModel::free_field();
  std::mt19937_64 rng(37);
  auto pts = sample_points(rng, 64);
  std::vector<ModeSpec> specs{{cplx{1.0, 0.0}, 0, 0.6}, {cplx{0.7, 0.2}, 1, -0.9}};
  auto wave = superpose(m, specs);

  auto a = schrodinger_residual(wave, pts, Exec::serial);
  auto b = schrodinger_residual(wave, pts, Exec::openmp);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(a[i].scalar_eq == b[i].scalar_eq);
    CHECK(a[i].vector_eq == b[i].vector_eq);
  }
  CHECK(second_order_residual(wave, pts, Exec::serial) ==
        second_order_residual(wave, pts, Exec::openmp));

  GridSpec spec{9, 9, 33, 0.0, 0.0, -6.0, 0.1, 0.1, 0.375};
  auto g = GridWave::sample(wave, spec);
  CHECK(conservation_residual(g, Exec::serial) ==
        conservation_residual(g, Exec::openmp));
}
