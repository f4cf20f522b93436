#include "dwq/gradedforms.hpp"

#include <bit>
#include <cctype>
#include <sstream>

#include "dwq/errors.hpp"

namespace dwq::gradedforms {

namespace {

int popcount(std::uint32_t x) { return std::popcount(x); }

bool supported_degree(const PhaseContext& ctx, int q) {
  return q == 0 || q == ctx.n() - 1 || q == ctx.n();
}

// ---------------------------------------------------------------------
// Exterior terms with at most a few vertical differentials. Factors are
// kept in the canonical order dz^{v1} ^ dz^{v2} ^ ... ^ dx^{h1} ^ ...,
// verticals by vertical index ascending, horizontals ascending; signs of
// contractions and wedges are Koszul signs relative to that order.
// ---------------------------------------------------------------------
struct ExtKey {
  std::uint32_t vmask = 0; // bits are vertical *indices* (ctx.vert_index)
  std::uint32_t hmask = 0;
  bool operator<(const ExtKey& o) const {
    return vmask != o.vmask ? vmask < o.vmask : hmask < o.hmask;
  }
  bool operator==(const ExtKey& o) const = default;
};
using ExtForm = std::map<ExtKey, Poly>;

void ext_add(ExtForm& f, const ExtKey& k, const Poly& c) {
  if (c.is_zero()) return;
  auto it = f.find(k);
  if (it == f.end()) {
    f.emplace(k, c);
  } else {
    it->second += c;
    if (it->second.is_zero()) f.erase(it);
  }
}

std::uint32_t low_bits(std::uint32_t mask, int r) {
  return mask & ((std::uint32_t{1} << r) - 1);
}

// Interior product with the basis vector d_v (vertical index r) or d_{x^r}.
// Returns the surviving key and sign, or nullopt when the factor is absent.
std::optional<std::pair<ExtKey, int>> contract_atom(ExtKey k, bool vertical,
                                                    int r) {
  if (vertical) {
    if (!((k.vmask >> r) & 1u)) return std::nullopt;
    const int pos = popcount(low_bits(k.vmask, r));
    k.vmask &= ~(std::uint32_t{1} << r);
    return std::make_pair(k, pos % 2 == 0 ? 1 : -1);
  }
  if (!((k.hmask >> r) & 1u)) return std::nullopt;
  const int pos = popcount(k.vmask) + popcount(low_bits(k.hmask, r));
  k.hmask &= ~(std::uint32_t{1} << r);
  return std::make_pair(k, pos % 2 == 0 ? 1 : -1);
}

// dx^i ^ (term): zero if dx^i already present.
std::optional<std::pair<ExtKey, int>> wedge_dx_left(ExtKey k, int i) {
  if ((k.hmask >> i) & 1u) return std::nullopt;
  const int pos = popcount(k.vmask) + popcount(low_bits(k.hmask, i));
  k.hmask |= std::uint32_t{1} << i;
  return std::make_pair(k, pos % 2 == 0 ? 1 : -1);
}

// Contraction by the simple multivector d_v ^ d_{j1} ^ ... ^ d_{js}
// (J ascending); iota over a wedge applies the rightmost factor first.
ExtForm contract_simple(const PhaseContext& ctx, const ExtForm& T,
                        int vert_var, std::uint32_t J) {
  ExtForm cur = T;
  std::vector<int> horiz;
  for (int i = 0; i < ctx.n(); ++i)
    if ((J >> i) & 1u) horiz.push_back(i);
  for (auto it = horiz.rbegin(); it != horiz.rend(); ++it) {
    ExtForm next;
    for (const auto& [k, c] : cur)
      if (auto hit = contract_atom(k, false, *it))
        ext_add(next, hit->first, hit->second > 0 ? c : -c);
    cur = std::move(next);
  }
  ExtForm out;
  const int vi = ctx.vert_index(vert_var);
  for (const auto& [k, c] : cur)
    if (auto hit = contract_atom(k, true, vi))
      ext_add(out, hit->first, hit->second > 0 ? c : -c);
  return out;
}

// Omega = -dy^a ^ dp^i_a ^ w_i with w_i = (-1)^i dx^{0...^i...n-1}.
ExtForm polysymplectic(const PhaseContext& ctx) {
  ExtForm omega;
  const std::uint32_t full = (std::uint32_t{1} << ctx.n()) - 1;
  for (int a = 0; a < ctx.m(); ++a)
    for (int i = 0; i < ctx.n(); ++i) {
      ExtKey k;
      k.vmask = (std::uint32_t{1} << ctx.vert_index(ctx.y_var(a))) |
                (std::uint32_t{1} << ctx.vert_index(ctx.p_var(i, a)));
      k.hmask = full & ~(std::uint32_t{1} << i);
      const int sign = (i % 2 == 0) ? -1 : 1; // -(-1)^i
      ext_add(omega, k, Poly::constant(sign));
    }
  return omega;
}

ExtForm to_ext(const VerticalDifferential& dF) {
  ExtForm f;
  for (const auto& [key, c] : dF.terms) {
    ExtKey k;
    k.vmask = std::uint32_t{1} << dF.ctx.vert_index(key.first);
    k.hmask = key.second;
    ext_add(f, k, c);
  }
  return f;
}

// ---------------------------------------------------------------------
// Exact linear solve A u = b with rational A and Poly right-hand side.
// Free unknowns are set to zero; rows that eliminate to 0 = poly must have
// a vanishing poly, otherwise the source form is not Hamiltonian.
// ---------------------------------------------------------------------
struct ExactSolve {
  std::vector<Poly> solution;           // one per unknown
  std::vector<std::vector<Rat>> kernel; // basis of A u = 0
  bool consistent = true;
};

ExactSolve solve_rational(std::vector<std::vector<Rat>> A,
                          std::vector<Poly> b) {
  const std::size_t rows = A.size();
  const std::size_t cols = rows == 0 ? 0 : A[0].size();
  std::vector<int> pivot_row_of_col(cols, -1);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pr = rank;
    while (pr < rows && A[pr][c] == 0) ++pr;
    if (pr == rows) continue;
    std::swap(A[pr], A[rank]);
    std::swap(b[pr], b[rank]);
    const Rat inv = 1 / A[rank][c];
    for (std::size_t cc = c; cc < cols; ++cc) A[rank][cc] *= inv;
    b[rank] = b[rank] * Poly::constant(inv);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == rank || A[r][c] == 0) continue;
      const Rat f = A[r][c];
      for (std::size_t cc = c; cc < cols; ++cc) A[r][cc] -= f * A[rank][cc];
      b[r] -= b[rank] * Poly::constant(f);
    }
    pivot_row_of_col[c] = static_cast<int>(rank);
    ++rank;
  }

  ExactSolve out;
  for (std::size_t r = rank; r < rows; ++r)
    if (!b[r].is_zero()) {
      out.consistent = false;
      return out;
    }

  out.solution.assign(cols, Poly{});
  for (std::size_t c = 0; c < cols; ++c)
    if (pivot_row_of_col[c] >= 0)
      out.solution[c] = b[static_cast<std::size_t>(pivot_row_of_col[c])];

  for (std::size_t f = 0; f < cols; ++f) {
    if (pivot_row_of_col[f] >= 0) continue;
    std::vector<Rat> v(cols, Rat(0));
    v[f] = 1;
    for (std::size_t c = 0; c < cols; ++c)
      if (pivot_row_of_col[c] >= 0)
        v[c] = -A[static_cast<std::size_t>(pivot_row_of_col[c])][f];
    out.kernel.push_back(std::move(v));
  }
  return out;
}

} // namespace

// ---------------------------------------------------------------------
// PhaseContext
// ---------------------------------------------------------------------
PhaseContext::PhaseContext(int n, int m) : n_(n), m_(m) {
  if (n < 1 || n > 16) throw InvalidParameter("PhaseContext: bad n");
  if (m < 1) throw InvalidParameter("PhaseContext: bad m");
}

int PhaseContext::x_var(int i) const {
  if (i < 0 || i >= n_) throw InvalidParameter("x index out of range");
  return i;
}

int PhaseContext::y_var(int a) const {
  if (a < 0 || a >= m_) throw InvalidParameter("y index out of range");
  return n_ + a;
}

int PhaseContext::p_var(int i, int a) const {
  if (i < 0 || i >= n_ || a < 0 || a >= m_)
    throw InvalidParameter("p index out of range");
  return n_ + m_ + i * m_ + a;
}

std::string PhaseContext::var_name(int id) const {
  std::ostringstream os;
  if (id < n_) {
    os << "x[" << id << "]";
  } else if (id < n_ + m_) {
    os << "y[" << id - n_ << "]";
  } else {
    const int k = id - n_ - m_;
    os << "p[" << k / m_ << "," << k % m_ << "]";
  }
  return os.str();
}

// ---------------------------------------------------------------------
// HorizontalForm
// ---------------------------------------------------------------------
HorizontalForm::HorizontalForm(PhaseContext ctx, int degree)
    : ctx_(std::move(ctx)), degree_(degree) {
  if (degree < 0 || degree > ctx_.n())
    throw UnsupportedDegree("form degree out of range [0, n]");
}

Poly HorizontalForm::component(std::uint32_t mask) const {
  auto it = comps_.find(mask);
  return it == comps_.end() ? Poly{} : it->second;
}

void HorizontalForm::set_component(std::uint32_t mask, Poly c) {
  if (popcount(mask) != degree_)
    throw InvalidParameter("component index does not match form degree");
  if (mask >= (std::uint32_t{1} << ctx_.n()))
    throw InvalidParameter("component index out of range");
  if (c.is_zero())
    comps_.erase(mask);
  else
    comps_[mask] = std::move(c);
}

HorizontalForm HorizontalForm::operator+(const HorizontalForm& o) const {
  if (!(ctx_ == o.ctx_) || degree_ != o.degree_)
    throw InvalidParameter("form mismatch in +");
  HorizontalForm r = *this;
  for (const auto& [m, c] : o.comps_) {
    Poly s = r.component(m) + c;
    r.set_component(m, std::move(s));
  }
  return r;
}

HorizontalForm HorizontalForm::operator-(const HorizontalForm& o) const {
  if (!(ctx_ == o.ctx_) || degree_ != o.degree_)
    throw InvalidParameter("form mismatch in -");
  HorizontalForm r = *this;
  for (const auto& [m, c] : o.comps_) {
    Poly s = r.component(m) - c;
    r.set_component(m, std::move(s));
  }
  return r;
}

HorizontalForm HorizontalForm::operator*(const Poly& c) const {
  HorizontalForm r(ctx_, degree_);
  for (const auto& [m, p] : comps_) r.set_component(m, p * c);
  return r;
}

bool HorizontalForm::operator==(const HorizontalForm& o) const {
  if (!(ctx_ == o.ctx_)) return false;
  // zero forms of any degree are the one canonical empty form
  if (comps_.empty() && o.comps_.empty()) return true;
  return degree_ == o.degree_ && comps_ == o.comps_;
}

HorizontalForm zero_form(const PhaseContext& ctx, Poly f) {
  HorizontalForm F(ctx, 0);
  F.set_component(0, std::move(f));
  return F;
}

HorizontalForm coordinate_form(const PhaseContext& ctx, int a) {
  return zero_form(ctx, Poly::variable(ctx.y_var(a)));
}

HorizontalForm momentum_component_form(const PhaseContext& ctx, int i, int a) {
  return zero_form(ctx, Poly::variable(ctx.p_var(i, a)));
}

HorizontalForm omega_wedge(const PhaseContext& ctx, Poly f, int i) {
  // w_i = (-1)^i dx^{0...^i...}
  HorizontalForm F(ctx, ctx.n() - 1);
  const std::uint32_t full = (std::uint32_t{1} << ctx.n()) - 1;
  const std::uint32_t mask = full & ~(std::uint32_t{1} << i);
  Poly c = std::move(f);
  if (i % 2 == 1) c = -c;
  F.set_component(mask, std::move(c));
  return F;
}

HorizontalForm momentum_form(const PhaseContext& ctx, int a) {
  HorizontalForm F(ctx, ctx.n() - 1);
  for (int i = 0; i < ctx.n(); ++i)
    F = F + omega_wedge(ctx, Poly::variable(ctx.p_var(i, a)), i);
  return F;
}

HorizontalForm field_volume_form(const PhaseContext& ctx, int b, int j) {
  return omega_wedge(ctx, Poly::variable(ctx.y_var(b)), j);
}

HorizontalForm volume_form(const PhaseContext& ctx, Poly f) {
  HorizontalForm F(ctx, ctx.n());
  F.set_component((std::uint32_t{1} << ctx.n()) - 1, std::move(f));
  return F;
}

// ---------------------------------------------------------------------
// Vertical differential and the polysymplectic map
// ---------------------------------------------------------------------
VerticalDifferential vertical_differential(const HorizontalForm& F) {
  const PhaseContext& ctx = F.ctx();
  if (!supported_degree(ctx, F.degree()))
    throw UnsupportedDegree(
        "vertical_differential: degree not in {0, n-1, n}");
  VerticalDifferential d{ctx, F.degree(), {}};
  for (const auto& [mask, c] : F.components())
    for (int vi = 0; vi < ctx.vertical_count(); ++vi) {
      const int v = ctx.vert_var(vi);
      Poly dc = c.derivative(v);
      if (dc.is_zero()) continue;
      d.terms[{v, mask}] = std::move(dc);
    }
  return d;
}

HamiltonianSolve hamiltonian_multivector_full(const HorizontalForm& F) {
  const PhaseContext& ctx = F.ctx();
  const int n = ctx.n();
  const int q = F.degree();
  if (!supported_degree(ctx, q))
    throw UnsupportedDegree(
        "hamiltonian_multivector: degree not in {0, n-1, n}");

  const ExtForm omega = polysymplectic(ctx);
  const ExtForm rhs = to_ext(vertical_differential(F));

  struct Unknown {
    int v;           // vertical var id
    std::uint32_t J; // horizontal mask (q < n)
    int k;           // horizontal index (q = n)
  };
  std::vector<Unknown> unknowns;
  std::vector<ExtForm> images;

  if (q < n) {
    const int hcount = n - q - 1;
    for (int vi = 0; vi < ctx.vertical_count(); ++vi) {
      const int v = ctx.vert_var(vi);
      for (std::uint32_t J = 0; J < (std::uint32_t{1} << n); ++J) {
        if (popcount(J) != hcount) continue;
        ExtForm img = contract_simple(ctx, omega, v, J);
        if (img.empty()) continue;
        unknowns.push_back({v, J, -1});
        images.push_back(std::move(img));
      }
    }
  } else {
    for (int vi = 0; vi < ctx.vertical_count(); ++vi) {
      const int v = ctx.vert_var(vi);
      const ExtForm base = contract_simple(ctx, omega, v, 0);
      for (int k = 0; k < n; ++k) {
        ExtForm img;
        for (const auto& [key, c] : base)
          if (auto hit = wedge_dx_left(key, k))
            ext_add(img, hit->first, hit->second > 0 ? c : -c);
        if (img.empty()) continue;
        unknowns.push_back({v, 0, k});
        images.push_back(std::move(img));
      }
    }
  }

  std::map<ExtKey, std::size_t> row_of;
  for (const auto& img : images)
    for (const auto& [k, c] : img) row_of.emplace(k, row_of.size());
  for (const auto& [k, c] : rhs) row_of.emplace(k, row_of.size());

  std::vector<std::vector<Rat>> A(row_of.size(),
                                  std::vector<Rat>(unknowns.size(), Rat(0)));
  std::vector<Poly> b(row_of.size());
  for (std::size_t u = 0; u < images.size(); ++u)
    for (const auto& [k, c] : images[u]) A[row_of[k]][u] = c.eval_exact({});
  for (const auto& [k, c] : rhs) b[row_of[k]] = c;

  ExactSolve sol = solve_rational(std::move(A), std::move(b));
  if (!sol.consistent)
    throw NotHamiltonian("no vertical multivector reproduces d^V F");

  HamiltonianSolve out{{ctx,
                        q < n ? VerticalMultivector::Kind::multivector
                              : VerticalMultivector::Kind::tangent_one_form,
                        q,
                        {},
                        {}},
                       {}};
  auto assign = [&](VerticalMultivector& X, std::size_t u, Poly val) {
    if (val.is_zero()) return;
    if (X.kind == VerticalMultivector::Kind::multivector)
      X.comps[{unknowns[u].v, unknowns[u].J}] = std::move(val);
    else
      X.tcomps[{unknowns[u].v, unknowns[u].k}] = std::move(val);
  };
  for (std::size_t u = 0; u < unknowns.size(); ++u)
    assign(out.X, u, sol.solution[u]);
  for (const auto& kv : sol.kernel) {
    VerticalMultivector K{ctx, out.X.kind, q, {}, {}};
    for (std::size_t u = 0; u < unknowns.size(); ++u)
      if (kv[u] != 0) assign(K, u, Poly::constant(kv[u]));
    out.kernel.push_back(std::move(K));
  }
  return out;
}

VerticalMultivector hamiltonian_multivector(const HorizontalForm& F) {
  return hamiltonian_multivector_full(F).X;
}

bool is_hamiltonian(const HorizontalForm& F) {
  try {
    hamiltonian_multivector(F);
    return true;
  } catch (const NotHamiltonian&) {
    return false;
  }
}

VerticalDifferential contract_polysymplectic(const VerticalMultivector& X) {
  const PhaseContext& ctx = X.ctx;
  const ExtForm omega = polysymplectic(ctx);
  ExtForm acc;
  if (X.kind == VerticalMultivector::Kind::multivector) {
    for (const auto& [key, c] : X.comps) {
      ExtForm img = contract_simple(ctx, omega, key.first, key.second);
      for (const auto& [k, s] : img) ext_add(acc, k, s * c);
    }
  } else {
    for (const auto& [key, c] : X.tcomps) {
      ExtForm base = contract_simple(ctx, omega, key.first, 0);
      for (const auto& [k, s] : base)
        if (auto hit = wedge_dx_left(k, key.second))
          ext_add(acc, hit->first, hit->second > 0 ? s * c : -(s * c));
    }
  }
  VerticalDifferential out{ctx, X.source_degree, {}};
  for (const auto& [k, c] : acc) {
    if (popcount(k.vmask) != 1)
      throw Error("contract_polysymplectic: non-vertical remainder");
    const int v = ctx.vert_var(std::countr_zero(k.vmask));
    out.terms[{v, k.hmask}] = c;
  }
  return out;
}

// ---------------------------------------------------------------------
// Bracket
// ---------------------------------------------------------------------
namespace {

HorizontalForm bracket_core(const VerticalMultivector& X1, int r,
                            const HorizontalForm& F2) {
  const PhaseContext& ctx = F2.ctx();
  const int n = ctx.n();
  const int s = F2.degree();
  const int d = r + s - n + 1;
  if (d < 0 || d > n)
    throw UndefinedBracketDegree("bracket degree " + std::to_string(d) +
                                 " out of [0, n]");
  const ExtForm dF2 = to_ext(vertical_differential(F2));

  ExtForm acc;
  if (X1.kind == VerticalMultivector::Kind::multivector) {
    for (const auto& [key, c] : X1.comps) {
      ExtForm img = contract_simple(ctx, dF2, key.first, key.second);
      for (const auto& [k, sgn] : img) ext_add(acc, k, sgn * c);
    }
  } else {
    for (const auto& [key, c] : X1.tcomps) {
      ExtForm base = contract_simple(ctx, dF2, key.first, 0);
      for (const auto& [k, sgn] : base)
        if (auto hit = wedge_dx_left(k, key.second))
          ext_add(acc, hit->first, hit->second > 0 ? sgn * c : -(sgn * c));
    }
  }

  HorizontalForm out(ctx, d);
  const bool flip = ((n - r) % 2) != 0;
  for (const auto& [k, c] : acc) {
    if (k.vmask != 0)
      throw Error("graded_bracket: vertical factor survived contraction");
    if (popcount(k.hmask) != d)
      throw Error("graded_bracket: unexpected result degree");
    out.set_component(k.hmask, flip ? -c : c);
  }
  return out;
}

} // namespace

HorizontalForm graded_bracket(const HorizontalForm& F1,
                              const HorizontalForm& F2) {
  if (!(F1.ctx() == F2.ctx()))
    throw InvalidParameter("graded_bracket: context mismatch");
  const int n = F1.ctx().n();
  const int d = F1.degree() + F2.degree() - n + 1;
  if (d < 0 || d > n)
    throw UndefinedBracketDegree("bracket degree " + std::to_string(d) +
                                 " out of [0, n]");
  const VerticalMultivector X1 = hamiltonian_multivector(F1);
  if (!is_hamiltonian(F2))
    throw NotHamiltonian("graded_bracket: second argument not Hamiltonian");
  return bracket_core(X1, F1.degree(), F2);
}

HorizontalForm graded_bracket_with(const VerticalMultivector& X1,
                                   const HorizontalForm& F2) {
  return bracket_core(X1, X1.source_degree, F2);
}

bool graded_antisymmetry_check(const HorizontalForm& F1,
                               const HorizontalForm& F2) {
  const int n = F1.ctx().n();
  const int r = F1.degree();
  const int s = F2.degree();
  HorizontalForm lhs = graded_bracket(F1, F2);
  HorizontalForm rhs = graded_bracket(F2, F1);
  const int exp = (n - r - 1) * (n - s - 1);
  // {F1,F2} = -(-1)^{exp} {F2,F1}
  if (exp % 2 == 0) return lhs == (HorizontalForm(F1.ctx(), lhs.degree()) - rhs);
  return lhs == rhs;
}

// ---------------------------------------------------------------------
// Equation of motion residual
// ---------------------------------------------------------------------
std::vector<double> equation_of_motion_residual(
    const HorizontalForm& F, const Poly& H, const SolutionSampler& sol,
    std::span<const std::vector<double>> points, Exec exec) {
  const PhaseContext& ctx = F.ctx();
  const int n = ctx.n();
  const int m = ctx.m();

  const HorizontalForm bracket = graded_bracket(volume_form(ctx, H), F);
  const VerticalDifferential dF = vertical_differential(F);

  // (dF - d^hor F) = sum_{v,k,I} dz^v/dx^k dF_{v,I} dx^k ^ dx^I.
  struct ChainTerm {
    int v;
    int k;
    std::uint32_t target;
    int sign;
    const Poly* coeff;
  };
  std::vector<ChainTerm> chain;
  for (const auto& [key, c] : dF.terms) {
    const auto [v, I] = key;
    for (int k = 0; k < n; ++k) {
      if ((I >> k) & 1u) continue;
      const int pos = popcount(low_bits(I, k));
      chain.push_back(
          {v, k, I | (std::uint32_t{1} << k), pos % 2 == 0 ? 1 : -1, &c});
    }
  }

  std::vector<double> out(points.size(), 0.0);
  auto eval_point = [&](std::size_t idx) {
    const SolutionSample s = sol(points[idx]);
    if (s.x.size() != static_cast<std::size_t>(n) ||
        s.y.size() != static_cast<std::size_t>(m) ||
        s.p.size() != static_cast<std::size_t>(n * m) ||
        s.dy.size() != static_cast<std::size_t>(n * m) ||
        s.dp.size() != static_cast<std::size_t>(n * n * m))
      throw InvalidSolutionData("solution sample has wrong shape");
    std::vector<double> vals(static_cast<std::size_t>(ctx.var_count()));
    for (int i = 0; i < n; ++i)
      vals[static_cast<std::size_t>(ctx.x_var(i))] =
          s.x[static_cast<std::size_t>(i)];
    for (int a = 0; a < m; ++a)
      vals[static_cast<std::size_t>(ctx.y_var(a))] =
          s.y[static_cast<std::size_t>(a)];
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a)
        vals[static_cast<std::size_t>(ctx.p_var(i, a))] =
            s.p[static_cast<std::size_t>(i * m + a)];

    auto dz = [&](int v, int k) -> double {
      if (v < n + m) {
        const int a = v - n;
        return s.dy[static_cast<std::size_t>(k * m + a)];
      }
      const int rem = v - n - m;
      const int i = rem / m;
      const int a = rem % m;
      return s.dp[static_cast<std::size_t>((k * n + i) * m + a)];
    };

    std::map<std::uint32_t, double> resid;
    for (const ChainTerm& t : chain)
      resid[t.target] += t.sign * dz(t.v, t.k) * t.coeff->eval(vals);
    for (const auto& [mask, c] : bracket.components())
      resid[mask] -= c.eval(vals);
    double worst = 0.0;
    for (const auto& [mask, val] : resid)
      worst = std::max(worst, std::abs(val));
    out[idx] = worst;
  };
  parallel_for(exec, points.size(), eval_point);
  return out;
}

// ---------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------
namespace {

std::string basis_suffix(const PhaseContext& ctx, std::uint32_t mask, int q,
                         Rat& coeff_sign) {
  const int n = ctx.n();
  coeff_sign = 1;
  if (q == 0) return "";
  if (q == n) return "*w";
  if (q == n - 1) {
    const std::uint32_t full = (std::uint32_t{1} << n) - 1;
    const int i = std::countr_zero(full & ~mask);
    if (i % 2 == 1) coeff_sign = -1; // dx^{comp(i)} = (-1)^i w_i
    std::ostringstream os;
    os << "*w[" << i << "]";
    return os.str();
  }
  std::ostringstream os;
  bool first = true;
  for (int i = 0; i < n; ++i)
    if ((mask >> i) & 1u) {
      os << (first ? "*dx[" : "^dx[") << i << "]";
      first = false;
    }
  return os.str();
}

} // namespace

std::string to_string(const HorizontalForm& F) {
  const PhaseContext& ctx = F.ctx();
  if (F.is_zero()) return "0";
  std::ostringstream os;
  bool first_term = true;
  for (const auto& [mask, poly] : F.components()) {
    Rat sign;
    const std::string suffix = basis_suffix(ctx, mask, F.degree(), sign);
    Poly printed = (sign == 1) ? poly : -poly;
    for (const auto& [mono, coeff] : printed.terms()) {
      Rat a = coeff;
      if (first_term) {
        if (a < 0) {
          os << "-";
          a = -a;
        }
      } else {
        os << (a < 0 ? " - " : " + ");
        if (a < 0) a = -a;
      }
      first_term = false;
      bool star = false;
      if (a != 1 || mono.factors.empty()) {
        os << a.get_str();
        star = true;
      }
      for (const auto& [v, e] : mono.factors) {
        if (star) os << "*";
        os << ctx.var_name(v);
        if (e > 1) os << "^" << e;
        star = true;
      }
      os << suffix;
    }
  }
  return os.str();
}

namespace {

struct Lexer {
  std::string s;
  std::size_t i = 0;
  void skip() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eof() {
    skip();
    return i >= s.size();
  }
  char peek() {
    skip();
    return i < s.size() ? s[i] : '\0';
  }
  char get() {
    skip();
    return s[i++];
  }
  bool accept(char c) {
    if (peek() == c) {
      ++i;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "' at offset " +
                       std::to_string(i) + " in form text");
  }
  long integer() {
    skip();
    std::size_t start = i;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (start == i) throw ParseError("expected integer in form text");
    return std::stol(s.substr(start, i - start));
  }
};

struct ParsedTerm {
  Poly coeff;
  int degree = 0;
  std::uint32_t mask = 0;
  bool basis_seen = false;
};

} // namespace

HorizontalForm parse_form(const PhaseContext& ctx, const std::string& text) {
  Lexer lx{text};
  const int n = ctx.n();
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  std::vector<ParsedTerm> terms;

  auto parse_factor = [&](ParsedTerm& t) {
    const char c = lx.peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      long num = lx.integer();
      long den = 1;
      if (lx.accept('/')) den = lx.integer();
      if (den == 0) throw ParseError("zero denominator");
      t.coeff = t.coeff * Poly::constant(num, den);
      return;
    }
    if (c == 'x' || c == 'y') {
      lx.get();
      lx.expect('[');
      const long idx = lx.integer();
      lx.expect(']');
      int var = (c == 'x') ? ctx.x_var(static_cast<int>(idx))
                           : ctx.y_var(static_cast<int>(idx));
      int exp = 1;
      if (lx.accept('^')) exp = static_cast<int>(lx.integer());
      t.coeff = t.coeff * Poly::variable(var).pow(exp);
      return;
    }
    if (c == 'p') {
      lx.get();
      lx.expect('[');
      const long i = lx.integer();
      lx.expect(',');
      const long a = lx.integer();
      lx.expect(']');
      int exp = 1;
      if (lx.accept('^')) exp = static_cast<int>(lx.integer());
      t.coeff =
          t.coeff *
          Poly::variable(ctx.p_var(static_cast<int>(i), static_cast<int>(a)))
              .pow(exp);
      return;
    }
    if (c == 'w') {
      if (t.basis_seen) throw ParseError("two basis factors in one term");
      lx.get();
      if (lx.accept('[')) {
        const long i = lx.integer();
        lx.expect(']');
        if (i < 0 || i >= n) throw ParseError("w index out of range");
        t.degree = n - 1;
        t.mask = full & ~(std::uint32_t{1} << i);
        if (i % 2 == 1) t.coeff = -t.coeff;
      } else {
        t.degree = n;
        t.mask = full;
      }
      t.basis_seen = true;
      return;
    }
    if (c == 'd') {
      if (t.basis_seen) throw ParseError("two basis factors in one term");
      std::uint32_t mask = 0;
      int sign = 1;
      std::vector<int> order;
      while (true) {
        lx.expect('d');
        lx.expect('x');
        lx.expect('[');
        const long i = lx.integer();
        lx.expect(']');
        if (i < 0 || i >= n) throw ParseError("dx index out of range");
        if ((mask >> i) & 1u) t.coeff = Poly{}; // dx^i ^ dx^i = 0
        int pos = 0;
        for (int prev : order)
          if (prev > i) ++pos;
        if (pos % 2 == 1) sign = -sign;
        order.push_back(static_cast<int>(i));
        mask |= std::uint32_t{1} << i;
        if (!lx.accept('^')) break;
      }
      t.degree = static_cast<int>(order.size());
      t.mask = mask;
      if (sign < 0) t.coeff = -t.coeff;
      t.basis_seen = true;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c +
                     "' in form text");
  };

  bool first = true;
  while (!lx.eof()) {
    int sign = 1;
    if (lx.accept('-'))
      sign = -1;
    else if (lx.accept('+'))
      sign = 1;
    else if (!first)
      throw ParseError("expected '+' or '-' between terms");
    first = false;

    ParsedTerm t;
    t.coeff = Poly::constant(sign);
    parse_factor(t);
    while (lx.accept('*')) parse_factor(t);
    terms.push_back(std::move(t));
  }
  if (terms.empty()) throw ParseError("empty form text");

  int degree = -1;
  for (const auto& t : terms) {
    if (t.coeff.is_zero() && !t.basis_seen) continue;
    if (degree == -1)
      degree = t.degree;
    else if (degree != t.degree)
      throw ParseError("mixed degrees in form text");
  }
  if (degree == -1) degree = 0; // "0" parses as the zero 0-form

  HorizontalForm F(ctx, degree);
  for (const auto& t : terms) {
    if (t.coeff.is_zero()) continue;
    F.set_component(t.mask, F.component(t.mask) + t.coeff);
  }
  return F;
}

} // namespace dwq::gradedforms
