#include "dwq/dwmech.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dwq/errors.hpp"

namespace dwq::dwmech {

namespace {

std::vector<double> phase_values(const PhaseContext& ctx,
                                 std::span<const double> x,
                                 std::span<const double> y,
                                 std::span<const double> p) {
  std::vector<double> vals(static_cast<std::size_t>(ctx.var_count()), 0.0);
  for (int i = 0; i < ctx.n(); ++i)
    vals[static_cast<std::size_t>(ctx.x_var(i))] = x.empty() ? 0.0 : x[static_cast<std::size_t>(i)];
  for (int a = 0; a < ctx.m(); ++a)
    vals[static_cast<std::size_t>(ctx.y_var(a))] = y[static_cast<std::size_t>(a)];
  for (int i = 0; i < ctx.n(); ++i)
    for (int a = 0; a < ctx.m(); ++a)
      vals[static_cast<std::size_t>(ctx.p_var(i, a))] =
          p.empty() ? 0.0 : p[static_cast<std::size_t>(i * ctx.m() + a)];
  return vals;
}

} // namespace

ScalarModel::ScalarModel(Metric metric, int m, Poly potential)
    : metric_(std::move(metric)),
      m_(m),
      ctx_(metric_.dim(), m),
      potential_(std::move(potential)) {
  // V must depend on the y-variables only
  for (const auto& [mono, c] : potential_.terms())
    for (const auto& [v, e] : mono.factors)
      if (v < ctx_.y_var(0) || v > ctx_.y_var(m_ - 1))
        throw InvalidParameter("ScalarModel: potential must depend on y only");
}

double ScalarModel::V(std::span<const double> y) const {
  return potential_.eval(phase_values(ctx_, {}, y, {}));
}

double ScalarModel::dV(int a, std::span<const double> y) const {
  return potential_.derivative(ctx_.y_var(a)).eval(phase_values(ctx_, {}, y, {}));
}

double ScalarModel::lagrangian(std::span<const double> y,
                               std::span<const double> dy) const {
  double kin = 0.0;
  for (int i = 0; i < n(); ++i)
    for (int a = 0; a < m_; ++a) {
      const double d = dy[static_cast<std::size_t>(i * m_ + a)];
      kin += 0.5 * metric_.sign(i) * d * d;
    }
  return kin - V(y);
}

double ScalarModel::hamiltonian(std::span<const double> y,
                                std::span<const double> p) const {
  double kin = 0.0;
  for (int i = 0; i < n(); ++i)
    for (int a = 0; a < m_; ++a) {
      const double pi = p[static_cast<std::size_t>(i * m_ + a)];
      kin += 0.5 * metric_.sign(i) * pi * pi;
    }
  return kin + V(y);
}

double ScalarModel::dH_dy(int a, std::span<const double> y,
                          std::span<const double>) const {
  return dV(a, y);
}

double ScalarModel::dH_dp(int i, int a, std::span<const double> p) const {
  return metric_.sign(i) * p[static_cast<std::size_t>(i * m_ + a)];
}

Poly ScalarModel::hamiltonian_poly() const {
  Poly H = potential_;
  for (int i = 0; i < n(); ++i)
    for (int a = 0; a < m_; ++a) {
      Poly p = Poly::variable(ctx_.p_var(i, a));
      H += Poly::constant(metric_.sign(i), 2) * p * p;
    }
  return H;
}

Poly quadratic_potential(const PhaseContext& ctx, double mass, double hbar) {
  // mpq from double is exact (dyadic), so the ring stays exact
  const double c = mass * mass / (2.0 * hbar * hbar);
  Poly y = Poly::variable(ctx.y_var(0));
  return Poly::constant(gradedforms::Rat(c)) * y * y;
}

Poly quadratic_potential_exact(const PhaseContext& ctx, long num, long den) {
  Poly y = Poly::variable(ctx.y_var(0));
  return Poly::constant(num, den) * y * y;
}

std::vector<double> polymomenta(const ScalarModel& model, const JetPoint& jp) {
  const int n = model.n();
  const int m = model.m();
  if (jp.y.size() != static_cast<std::size_t>(m) ||
      jp.dy.size() != static_cast<std::size_t>(n * m))
    throw InvalidSolutionData("polymomenta: jet has wrong shape");
  std::vector<double> p(static_cast<std::size_t>(n * m));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a)
      p[static_cast<std::size_t>(i * m + a)] =
          model.metric().sign(i) * jp.dy[static_cast<std::size_t>(i * m + a)];
  return p;
}

double dw_hamiltonian(const ScalarModel& model, std::span<const double> y,
                      std::span<const double> p) {
  return model.hamiltonian(y, p);
}

// ---------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------
SolutionSampler plane_wave_sampler(const ScalarModel& model,
                                   std::vector<double> k,
                                   std::vector<double> amp) {
  const int n = model.n();
  const int m = model.m();
  if (k.size() != static_cast<std::size_t>(n) ||
      amp.size() != static_cast<std::size_t>(m))
    throw InvalidParameter("plane_wave_sampler: bad k or amplitude shape");
  Metric g = model.metric();
  return [=](std::span<const double> x) {
    SolutionSample s;
    s.x.assign(x.begin(), x.end());
    double phase = 0.0;
    for (int i = 0; i < n; ++i) phase += k[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    const double c = std::cos(phase), sn = std::sin(phase);
    s.y.resize(static_cast<std::size_t>(m));
    s.dy.resize(static_cast<std::size_t>(n * m));
    s.p.resize(static_cast<std::size_t>(n * m));
    s.dp.resize(static_cast<std::size_t>(n * n * m));
    for (int a = 0; a < m; ++a) s.y[static_cast<std::size_t>(a)] = amp[static_cast<std::size_t>(a)] * c;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        // d_i y = -A k_i sin
        s.dy[static_cast<std::size_t>(i * m + a)] =
            -amp[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(i)] * sn;
        // p^i = g^{ii} d_i y
        s.p[static_cast<std::size_t>(i * m + a)] =
            g.sign(i) * s.dy[static_cast<std::size_t>(i * m + a)];
      }
    for (int kk = 0; kk < n; ++kk)
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a)
          // d_k p^i = -g^{ii} A k_i k_k cos
          s.dp[static_cast<std::size_t>((kk * n + i) * m + a)] =
              -g.sign(i) * amp[static_cast<std::size_t>(a)] *
              k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(kk)] * c;
    return s;
  };
}

SolutionSampler constant_sampler(const ScalarModel& model,
                                 std::vector<double> y0) {
  const int n = model.n();
  const int m = model.m();
  if (y0.size() != static_cast<std::size_t>(m))
    throw InvalidParameter("constant_sampler: bad y0 shape");
  return [=](std::span<const double> x) {
    SolutionSample s;
    s.x.assign(x.begin(), x.end());
    s.y = y0;
    s.dy.assign(static_cast<std::size_t>(n * m), 0.0);
    s.p.assign(static_cast<std::size_t>(n * m), 0.0);
    s.dp.assign(static_cast<std::size_t>(n * n * m), 0.0);
    return s;
  };
}

SolutionSampler finite_difference_sampler(
    const ScalarModel& model,
    std::function<std::vector<double>(std::span<const double>)> y_of_x,
    double h) {
  if (!(h > 0)) throw InvalidParameter("finite_difference_sampler: h <= 0");
  const int n = model.n();
  const int m = model.m();
  Metric g = model.metric();
  return [=](std::span<const double> x) {
    SolutionSample s;
    s.x.assign(x.begin(), x.end());
    s.y = y_of_x(x);
    if (s.y.size() != static_cast<std::size_t>(m))
      throw InvalidSolutionData("field callable has wrong arity");
    s.dy.assign(static_cast<std::size_t>(n * m), 0.0);
    s.p.assign(static_cast<std::size_t>(n * m), 0.0);
    s.dp.assign(static_cast<std::size_t>(n * n * m), 0.0);
    auto dy_at = [&](std::span<const double> xq, int i, int a) {
      std::vector<double> xp(xq.begin(), xq.end()), xm(xq.begin(), xq.end());
      xp[static_cast<std::size_t>(i)] += h;
      xm[static_cast<std::size_t>(i)] -= h;
      return (y_of_x(xp)[static_cast<std::size_t>(a)] -
              y_of_x(xm)[static_cast<std::size_t>(a)]) /
             (2.0 * h);
    };
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        s.dy[static_cast<std::size_t>(i * m + a)] = dy_at(x, i, a);
        s.p[static_cast<std::size_t>(i * m + a)] =
            g.sign(i) * s.dy[static_cast<std::size_t>(i * m + a)];
      }
    for (int kk = 0; kk < n; ++kk) {
      std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
      xp[static_cast<std::size_t>(kk)] += h;
      xm[static_cast<std::size_t>(kk)] -= h;
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) {
          const double pp = g.sign(i) * dy_at(xp, i, a);
          const double pm = g.sign(i) * dy_at(xm, i, a);
          s.dp[static_cast<std::size_t>((kk * n + i) * m + a)] =
              (pp - pm) / (2.0 * h);
        }
    }
    return s;
  };
}

// ---------------------------------------------------------------------
// CSV grid solutions
// ---------------------------------------------------------------------
GridSolution GridSolution::load_csv(const ScalarModel& model,
                                    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSolutionData("cannot open solution file: " + path);
  const int n = model.n();
  const int m = model.m();

  std::string line;
  if (!std::getline(in, line))
    throw InvalidSolutionData("empty solution file: " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::string> expected;
  for (int i = 0; i < n; ++i) expected.push_back("x" + std::to_string(i));
  for (int a = 0; a < m; ++a) expected.push_back("y" + std::to_string(a));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a)
      expected.push_back("dy" + std::to_string(i) + "_" + std::to_string(a));
  if (header != expected)
    throw InvalidSolutionData("solution file header mismatch in " + path);

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidSolutionData("bad number at line " +
                                  std::to_string(lineno) + " of " + path);
      }
    }
    if (row.size() != expected.size())
      throw InvalidSolutionData("wrong column count at line " +
                                std::to_string(lineno) + " of " + path);
    if (std::any_of(row.begin(), row.end(),
                    [](double v) { return !std::isfinite(v); }))
      throw InvalidSolutionData("non-finite value at line " +
                                std::to_string(lineno) + " of " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidSolutionData("no data rows in " + path);

  GridSolution gs;
  gs.model_ = &model;
  gs.axes_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> vals;
    for (const auto& r : rows) vals.push_back(r[static_cast<std::size_t>(i)]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (vals.size() < 3)
      throw InvalidSolutionData("axis " + std::to_string(i) +
                                " has fewer than 3 grid lines");
    gs.axes_[static_cast<std::size_t>(i)] = std::move(vals);
  }
  std::size_t expect_nodes = 1;
  for (const auto& ax : gs.axes_) expect_nodes *= ax.size();
  if (expect_nodes != rows.size())
    throw InvalidSolutionData("rows do not form a full tensor grid in " + path);

  gs.node_count_ = expect_nodes;
  gs.y_.assign(expect_nodes * static_cast<std::size_t>(m), 0.0);
  gs.dy_.assign(expect_nodes * static_cast<std::size_t>(n * m), 0.0);
  for (const auto& r : rows) {
    const std::size_t node = gs.index_of(std::span(r.data(), static_cast<std::size_t>(n)));
    for (int a = 0; a < m; ++a)
      gs.y_[node * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)] =
          r[static_cast<std::size_t>(n + a)];
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a)
        gs.dy_[node * static_cast<std::size_t>(n * m) +
               static_cast<std::size_t>(i * m + a)] =
            r[static_cast<std::size_t>(n + m + i * m + a)];
  }
  return gs;
}

std::size_t GridSolution::index_of(std::span<const double> x) const {
  std::size_t idx = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const auto& ax = axes_[d];
    auto it = std::lower_bound(ax.begin(), ax.end(), x[d] - 1e-12);
    if (it == ax.end() || std::abs(*it - x[d]) > 1e-9)
      throw InvalidSolutionData("query point off the solution grid");
    idx = idx * ax.size() + static_cast<std::size_t>(it - ax.begin());
  }
  return idx;
}

std::vector<std::vector<double>> GridSolution::interior_points() const {
  std::vector<std::vector<double>> pts;
  std::vector<std::size_t> iv(axes_.size(), 1);
  while (true) {
    std::vector<double> x;
    for (std::size_t d = 0; d < axes_.size(); ++d) x.push_back(axes_[d][iv[d]]);
    pts.push_back(std::move(x));
    int d = static_cast<int>(axes_.size()) - 1;
    while (d >= 0) {
      if (++iv[static_cast<std::size_t>(d)] <=
          axes_[static_cast<std::size_t>(d)].size() - 2)
        break;
      iv[static_cast<std::size_t>(d)] = 1;
      --d;
    }
    if (d < 0) return pts;
  }
}

SolutionSampler GridSolution::sampler() const {
  const GridSolution* gs = this;
  const ScalarModel* model = model_;
  return [gs, model](std::span<const double> x) {
    const int n = model->n();
    const int m = model->m();
    // locate the node and its neighbors along each axis
    std::vector<std::size_t> iv(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
      const auto& ax = gs->axes_[static_cast<std::size_t>(d)];
      auto it = std::lower_bound(ax.begin(), ax.end(), x[static_cast<std::size_t>(d)] - 1e-12);
      if (it == ax.end() || std::abs(*it - x[static_cast<std::size_t>(d)]) > 1e-9)
        throw InvalidSolutionData("query point off the solution grid");
      iv[static_cast<std::size_t>(d)] = static_cast<std::size_t>(it - ax.begin());
      if (iv[static_cast<std::size_t>(d)] == 0 ||
          iv[static_cast<std::size_t>(d)] + 1 == ax.size())
        throw InvalidSolutionData("query point on the grid boundary");
    }
    auto flat = [&](const std::vector<std::size_t>& ix) {
      std::size_t idx = 0;
      for (std::size_t d = 0; d < ix.size(); ++d)
        idx = idx * gs->axes_[d].size() + ix[d];
      return idx;
    };
    const std::size_t node = flat(iv);

    SolutionSample s;
    s.x.assign(x.begin(), x.end());
    s.y.resize(static_cast<std::size_t>(m));
    s.dy.resize(static_cast<std::size_t>(n * m));
    s.p.resize(static_cast<std::size_t>(n * m));
    s.dp.resize(static_cast<std::size_t>(n * n * m));
    for (int a = 0; a < m; ++a)
      s.y[static_cast<std::size_t>(a)] =
          gs->y_[node * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)];
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        const double d = gs->dy_[node * static_cast<std::size_t>(n * m) +
                                 static_cast<std::size_t>(i * m + a)];
        s.dy[static_cast<std::size_t>(i * m + a)] = d;
        s.p[static_cast<std::size_t>(i * m + a)] = model->metric().sign(i) * d;
      }
    // dp by central differences of p = g dy along each axis
    for (int kk = 0; kk < n; ++kk) {
      auto up = iv, dn = iv;
      ++up[static_cast<std::size_t>(kk)];
      --dn[static_cast<std::size_t>(kk)];
      const std::size_t nu = flat(up), nd = flat(dn);
      const double hk =
          gs->axes_[static_cast<std::size_t>(kk)][up[static_cast<std::size_t>(kk)]] -
          gs->axes_[static_cast<std::size_t>(kk)][dn[static_cast<std::size_t>(kk)]];
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) {
          const double pu =
              model->metric().sign(i) *
              gs->dy_[nu * static_cast<std::size_t>(n * m) +
                      static_cast<std::size_t>(i * m + a)];
          const double pd =
              model->metric().sign(i) *
              gs->dy_[nd * static_cast<std::size_t>(n * m) +
                      static_cast<std::size_t>(i * m + a)];
          s.dp[static_cast<std::size_t>((kk * n + i) * m + a)] = (pu - pd) / hk;
        }
    }
    return s;
  };
}

// ---------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------
DwEquationResidual dw_equations_residual(
    const ScalarModel& model, const SolutionSampler& sol,
    std::span<const std::vector<double>> points, Exec exec) {
  const int n = model.n();
  const int m = model.m();
  std::vector<double> mom(points.size(), 0.0), fld(points.size(), 0.0);
  parallel_for(exec, points.size(), [&](std::size_t idx) {
    const SolutionSample s = sol(points[idx]);
    if (s.y.size() != static_cast<std::size_t>(m) ||
        s.p.size() != static_cast<std::size_t>(n * m) ||
        s.dy.size() != static_cast<std::size_t>(n * m) ||
        s.dp.size() != static_cast<std::size_t>(n * n * m))
      throw InvalidSolutionData("solution sample has wrong shape");
    double worst_m = 0.0, worst_f = 0.0;
    for (int a = 0; a < m; ++a) {
      double div_p = 0.0;
      for (int i = 0; i < n; ++i)
        div_p += s.dp[static_cast<std::size_t>((i * n + i) * m + a)];
      worst_m = std::max(worst_m, std::abs(div_p + model.dH_dy(a, s.y, s.p)));
      for (int i = 0; i < n; ++i) {
        const double lhs = s.dy[static_cast<std::size_t>(i * m + a)];
        worst_f = std::max(worst_f, std::abs(lhs - model.dH_dp(i, a, s.p)));
      }
    }
    mom[idx] = worst_m;
    fld[idx] = worst_f;
  });
  DwEquationResidual r;
  for (double v : mom) r.momentum_eq = std::max(r.momentum_eq, v);
  for (double v : fld) r.field_eq = std::max(r.field_eq, v);
  return r;
}

std::vector<double> dwhj_residual(const ScalarModel& model,
                                  const HJFunctions& S,
                                  std::span<const std::vector<double>> points,
                                  Exec exec) {
  const int n = model.n();
  const int m = model.m();
  if (!S.S) throw InvalidSolutionData("dwhj_residual: missing S callable");
  std::vector<double> out(points.size(), 0.0);
  parallel_for(exec, points.size(), [&](std::size_t idx) {
    const auto& pt = points[idx];
    if (pt.size() != static_cast<std::size_t>(n + m))
      throw InvalidSolutionData("dwhj point has wrong arity");
    std::span<const double> x(pt.data(), static_cast<std::size_t>(n));
    std::span<const double> y(pt.data() + n, static_cast<std::size_t>(m));

    auto dS_dx = [&](int i, int k) {
      if (S.dS_dx) return S.dS_dx(i, k, x, y);
      std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
      xp[static_cast<std::size_t>(k)] += S.fd_step;
      xm[static_cast<std::size_t>(k)] -= S.fd_step;
      return (S.S(i, xp, y) - S.S(i, xm, y)) / (2.0 * S.fd_step);
    };
    auto dS_dy = [&](int i, int a) {
      if (S.dS_dy) return S.dS_dy(i, a, x, y);
      std::vector<double> yp(y.begin(), y.end()), ym(y.begin(), y.end());
      yp[static_cast<std::size_t>(a)] += S.fd_step;
      ym[static_cast<std::size_t>(a)] -= S.fd_step;
      return (S.S(i, x, yp) - S.S(i, x, ym)) / (2.0 * S.fd_step);
    };

    double div = 0.0;
    for (int i = 0; i < n; ++i) div += dS_dx(i, i);
    std::vector<double> p(static_cast<std::size_t>(n * m));
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a)
        p[static_cast<std::size_t>(i * m + a)] = dS_dy(i, a);
    out[idx] = std::abs(div + model.hamiltonian(y, p));
  });
  return out;
}

std::vector<double> eom_residual(const gradedforms::HorizontalForm& F,
                                 const ScalarModel& model,
                                 const SolutionSampler& sol,
                                 std::span<const std::vector<double>> points,
                                 Exec exec) {
  return gradedforms::equation_of_motion_residual(F, model.hamiltonian_poly(),
                                                  sol, points, exec);
}

} // namespace dwq::dwmech
