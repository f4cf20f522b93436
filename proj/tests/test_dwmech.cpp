#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "dwq/dwmech.hpp"

using namespace dwq;
using namespace dwq::dwmech;
using gradedforms::Poly;

namespace {

ScalarModel free_model_2d(double mass = 1.0, double hbar = 1.0) {
  PhaseContext ctx(2, 1);
  return ScalarModel(Metric::minkowski(2), 1,
                     quadratic_potential(ctx, mass, hbar));
}

std::vector<std::vector<double>> random_points(int n, int count,
                                               std::mt19937_64& rng,
                                               double lo = -1.0,
                                               double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) {
    std::vector<double> x;
    for (int d = 0; d < n; ++d) x.push_back(u(rng));
    pts.push_back(std::move(x));
  }
  return pts;
}

// dispersion-true plane wave: k0 = sqrt(m^2/hbar^2 + k1^2)
std::vector<double> kg_wave_vector(double mass, double hbar, double k1) {
  return {std::sqrt(mass * mass / (hbar * hbar) + k1 * k1), k1};
}

} // namespace

TEST_CASE("polymomenta of the scalar model") {
  ScalarModel model(Metric::minkowski(2), 1,
                    Poly{}); // free massless
  // dy = (2, 3), metric (+,-) -> p = (2, -3)
  JetPoint jp{{0.0, 0.0}, {1.0}, {2.0, 3.0}};
  auto p = polymomenta(model, jp);
  CHECK(p[0] == 2.0);
  CHECK(p[1] == -3.0);
  // zero jet -> zero momenta
  JetPoint z{{0.0, 0.0}, {0.5}, {0.0, 0.0}};
  auto pz = polymomenta(model, z);
  CHECK(pz[0] == 0.0);
  CHECK(pz[1] == 0.0);
}

TEST_CASE("polymomenta componentwise for two fields") {
  PhaseContext ctx(2, 2);
  ScalarModel model(Metric::minkowski(2), 2, Poly{});
  JetPoint jp{{0.0, 0.0}, {1.0, -1.0}, {0.5, -0.25, 2.0, 4.0}};
  auto p = polymomenta(model, jp);
  // p^i_a = g^{ii} d_i y^a, layout [i*m + a]
  CHECK(p[0] == 0.5);
  CHECK(p[1] == -0.25);
  CHECK(p[2] == -2.0);
  CHECK(p[3] == -4.0);
}

TEST_CASE("dw hamiltonian values and Legendre round trip") {
  auto model = free_model_2d();
  // p = 0 at the V minimum -> H = 0
  {
    std::vector<double> y{0.0}, p{0.0, 0.0};
    CHECK(dw_hamiltonian(model, y, p) == 0.0);
  }
  // V = m^2 y^2 / 2 hbar^2, y=1, p=0, m=hbar=1 -> H = 1/2
  {
    std::vector<double> y{1.0}, p{0.0, 0.0};
    CHECK(dw_hamiltonian(model, y, p) == doctest::Approx(0.5).epsilon(1e-15));
  }
  // H(p(jet)) + L(jet) = p . dy on random jets
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    JetPoint jp{{u(rng), u(rng)}, {u(rng)}, {u(rng), u(rng)}};
    auto p = polymomenta(model, jp);
    const double H = dw_hamiltonian(model, jp.y, p);
    const double L = model.lagrangian(jp.y, jp.dy);
    double pdy = 0.0;
    for (int i = 0; i < 2; ++i) pdy += p[static_cast<std::size_t>(i)] * jp.dy[static_cast<std::size_t>(i)];
    CHECK(std::abs(H - (pdy - L)) < 1e-12);
    CHECK(std::abs(H + L - pdy) < 1e-12);
  }
}

TEST_CASE("plane-wave Klein-Gordon solution satisfies the DW equations") {
  auto model = free_model_2d();
  std::mt19937_64 rng(17);
  auto pts = random_points(2, 60, rng, -2.0, 2.0);
  auto sol = plane_wave_sampler(model, kg_wave_vector(1.0, 1.0, 0.7), {0.8});

  auto res = dw_equations_residual(model, sol, pts);
  CHECK(res.momentum_eq < 1e-10);
  CHECK(res.field_eq < 1e-10);

  // static vacuum: constant y* with V'(y*) = 0
  auto vac = constant_sampler(model, {0.0});
  auto res0 = dw_equations_residual(model, vac, pts);
  CHECK(res0.momentum_eq == 0.0);
  CHECK(res0.field_eq == 0.0);

  // negative control: broken dispersion
  auto bad = plane_wave_sampler(model, {1.7, 0.7}, {0.8});
  auto resb = dw_equations_residual(model, bad, pts);
  CHECK(resb.momentum_eq > 1e-2);
}

TEST_CASE("finite-difference sampler converges at order 2") {
  auto model = free_model_2d();
  const auto k = kg_wave_vector(1.0, 1.0, 0.4);
  auto y_of_x = [&](std::span<const double> x) {
    return std::vector<double>{0.9 * std::cos(k[0] * x[0] + k[1] * x[1])};
  };
  std::mt19937_64 rng(23);
  auto pts = random_points(2, 25, rng, -1.5, 1.5);
  std::vector<double> hs{2e-2, 1e-2, 5e-3, 2.5e-3};
  std::vector<double> rs;
  for (double h : hs) {
    auto sol = finite_difference_sampler(model, y_of_x, h);
    rs.push_back(dw_equations_residual(model, sol, pts).momentum_eq);
  }
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    const double order = std::log2(rs[i] / rs[i + 1]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("DW Hamilton-Jacobi residuals") {
  // n=1 harmonic oscillator: S(t,y) = -(w/2) y^2 tan(w t)
  {
    PhaseContext ctx(1, 1);
    const double w = 1.3;
    // V = w^2 y^2 / 2  (mass w, hbar 1)
    ScalarModel model(Metric({1}), 1, quadratic_potential(ctx, w, 1.0));
    HJFunctions S;
    S.S = [w](int, std::span<const double> x, std::span<const double> y) {
      return -0.5 * w * y[0] * y[0] * std::tan(w * x[0]);
    };
    S.dS_dx = [w](int, int, std::span<const double> x,
                  std::span<const double> y) {
      const double sec = 1.0 / std::cos(w * x[0]);
      return -0.5 * w * w * y[0] * y[0] * sec * sec;
    };
    S.dS_dy = [w](int, int, std::span<const double> x,
                  std::span<const double> y) {
      return -w * y[0] * std::tan(w * x[0]);
    };
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ut(-0.5, 0.5), uy(-2.0, 2.0);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({ut(rng), uy(rng)});
    auto res = dwhj_residual(model, S, pts);
    for (double r : res) CHECK(r < 1e-8);
    // finite-difference fallback agrees to O(h^2)
    HJFunctions Sfd;
    Sfd.S = S.S;
    auto resfd = dwhj_residual(model, Sfd, pts);
    for (double r : resfd) CHECK(r < 1e-6);
  }
  // V = 0, S = 0 -> residual 0
  {
    PhaseContext ctx(2, 1);
    ScalarModel model(Metric::minkowski(2), 1, Poly{});
    HJFunctions S;
    S.S = [](int, std::span<const double>, std::span<const double>) {
      return 0.0;
    };
    S.dS_dx = [](int, int, std::span<const double>, std::span<const double>) {
      return 0.0;
    };
    S.dS_dy = [](int, int, std::span<const double>, std::span<const double>) {
      return 0.0;
    };
    std::vector<std::vector<double>> pts{{0.1, 0.2, 0.3}, {1.0, -1.0, 0.5}};
    auto res = dwhj_residual(model, S, pts);
    CHECK(res[0] == 0.0);
    CHECK(res[1] == 0.0);
  }
}

TEST_CASE("bracket equation of motion on classical solutions") {
  auto model = free_model_2d();
  const auto& ctx = model.context();
  std::mt19937_64 rng(41);
  auto pts = random_points(2, 40, rng, -2.0, 2.0);
  auto sol = plane_wave_sampler(model, kg_wave_vector(1.0, 1.0, 0.7), {0.8});

  // F = y^a reproduces d_i y = dH/dp
  {
    auto res = eom_residual(gradedforms::coordinate_form(ctx, 0), model, sol, pts);
    for (double r : res) CHECK(r < 1e-10);
  }
  // F = p_a reproduces d_i p^i = -dH/dy
  {
    auto res = eom_residual(gradedforms::momentum_form(ctx, 0), model, sol, pts);
    for (double r : res) CHECK(r < 1e-10);
  }
  // F = const 0-form: residual identically zero
  {
    auto res = eom_residual(gradedforms::zero_form(ctx, Poly::constant(7, 3)),
                            model, sol, pts);
    for (double r : res) CHECK(r == 0.0);
  }
  // negative control: broken dispersion
  {
    auto bad = plane_wave_sampler(model, {1.7, 0.7}, {0.8});
    auto res = eom_residual(gradedforms::momentum_form(ctx, 0), model, bad, pts);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, r);
    CHECK(worst > 1e-2);
  }
}

TEST_CASE("grid solutions from CSV") {
  auto model = free_model_2d();
  const auto k = kg_wave_vector(1.0, 1.0, 0.5);
  const double A = 0.6;

  // write a tensor-grid fixture
  const char* path = "test_grid_solution.csv";
  {
    std::ofstream f(path);
    f << "x0,x1,y0,dy0_0,dy1_0\n";
    const int N = 41;
    const double h = 0.05;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double t = -1.0 + h * i, x = -1.0 + h * j;
        const double ph = k[0] * t + k[1] * x;
        f << t << ',' << x << ',' << A * std::cos(ph) << ','
          << -A * k[0] * std::sin(ph) << ',' << -A * k[1] * std::sin(ph)
          << "\n";
      }
  }
  auto gs = GridSolution::load_csv(model, path);
  auto pts = gs.interior_points();
  CHECK(pts.size() == 39u * 39u);
  auto res = dw_equations_residual(model, gs.sampler(), pts);
  // dp comes from central differences: O(h^2)
  CHECK(res.field_eq < 1e-12);
  CHECK(res.momentum_eq < 2e-3);
  CHECK(res.momentum_eq > 1e-8);
  std::remove(path);

  // corrupted file: bad number
  {
    std::ofstream f(path);
    f << "x0,x1,y0,dy0_0,dy1_0\n0,0,1,oops,0\n";
  }
  CHECK_THROWS_AS(GridSolution::load_csv(model, path), InvalidSolutionData);
  std::remove(path);

  // wrong header
  {
    std::ofstream f(path);
    f << "t,x,y\n0,0,1\n";
  }
  CHECK_THROWS_AS(GridSolution::load_csv(model, path), InvalidSolutionData);
  std::remove(path);

  // not a tensor grid
  {
    std::ofstream f(path);
    f << "x0,x1,y0,dy0_0,dy1_0\n";
    f << "0,0,1,0,0\n0,1,1,0,0\n1,0,1,0,0\n";
    f << "0,0.5,1,0,0\n0.2,0.7,1,0,0\n1,1,1,0,0\n";
  }
  CHECK_THROWS_AS(GridSolution::load_csv(model, path), InvalidSolutionData);
  std::remove(path);

  CHECK_THROWS_AS(GridSolution::load_csv(model, "does_not_exist.csv"),
                  InvalidSolutionData);
}

TEST_CASE("serial and openmp residual paths agree exactly") {
  auto model = free_model_2d();
  std::mt19937_64 rng(51);
  auto pts = random_points(2, 64, rng, -2.0, 2.0);
  auto sol = plane_wave_sampler(model, {1.4, 0.6}, {0.8});
  auto a = dw_equations_residual(model, sol, pts, Exec::serial);
  auto b = dw_equations_residual(model, sol, pts, Exec::openmp);
  CHECK(a.momentum_eq == b.momentum_eq);
  CHECK(a.field_eq == b.field_eq);
  auto ra = eom_residual(gradedforms::momentum_form(model.context(), 0), model,
                         sol, pts, Exec::serial);
  auto rb = eom_residual(gradedforms::momentum_form(model.context(), 0), model,
                         sol, pts, Exec::openmp);
  CHECK(ra == rb);
}
