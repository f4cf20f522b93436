#include "dwq/clifford.hpp"

#include <bit>
#include <cmath>

namespace dwq::clifford {

Metric::Metric(std::vector<int> diag) : diag_(std::move(diag)) {
  if (diag_.empty() || diag_.size() > max_dim)
    throw InvalidParameter("metric dimension must be in [1," +
                           std::to_string(max_dim) + "]");
  for (int s : diag_)
    if (s != 1 && s != -1)
      throw InvalidParameter("metric entries must be +1 or -1");
}

Metric Metric::minkowski(int n) {
  std::vector<int> d(static_cast<std::size_t>(n), -1);
  if (n >= 1) d[0] = 1;
  return Metric(std::move(d));
}

Metric Metric::euclidean(int n) {
  return Metric(std::vector<int>(static_cast<std::size_t>(n), 1));
}

int Metric::sigma() const {
  int s = 1;
  for (int d : diag_) s *= d;
  return s;
}

int blade_product_sign(const Metric& m, std::uint32_t a, std::uint32_t b) {
  // Count transpositions needed to merge the two ordered generator lists.
  int swaps = 0;
  std::uint32_t a_hi = a >> 1;
  while (a_hi != 0) {
    swaps += std::popcount(a_hi & b);
    a_hi >>= 1;
  }
  int sign = (swaps % 2 == 0) ? 1 : -1;
  // Repeated generators contract through g_i g_i = g_ii.
  std::uint32_t common = a & b;
  while (common != 0) {
    int i = std::countr_zero(common);
    sign *= m.sign(i);
    common &= common - 1;
  }
  return sign;
}

Multivector::Multivector(Metric metric)
    : metric_(std::move(metric)),
      coeffs_(std::size_t{1} << metric_.dim(), cplx{0.0, 0.0}) {}

Multivector Multivector::scalar(const Metric& m, cplx value) {
  Multivector r(m);
  r.coeffs_[0] = value;
  return r;
}

Multivector Multivector::generator(const Metric& m, int i) {
  if (i < 0 || i >= m.dim()) throw InvalidParameter("generator index out of range");
  Multivector r(m);
  r.coeffs_[std::uint32_t{1} << i] = 1.0;
  return r;
}

Multivector Multivector::generator_upper(const Metric& m, int i) {
  Multivector r = generator(m, i);
  return r * cplx(static_cast<double>(m.sign(i)), 0.0);
}

Multivector Multivector::blade(const Metric& m, std::uint32_t mask, cplx value) {
  Multivector r(m);
  r.coeffs_.at(mask) = value;
  return r;
}

void Multivector::check_compatible(const Multivector& o) const {
  if (metric_ != o.metric_)
    throw MetricMismatch("multivectors over different metrics");
}

Multivector Multivector::grade(int k) const {
  Multivector r(metric_);
  for (std::uint32_t b = 0; b < coeffs_.size(); ++b)
    if (std::popcount(b) == k) r.coeffs_[b] = coeffs_[b];
  return r;
}

double Multivector::max_abs() const {
  double m = 0.0;
  for (const cplx& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

Multivector Multivector::operator+(const Multivector& o) const {
  check_compatible(o);
  Multivector r(metric_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    r.coeffs_[i] = coeffs_[i] + o.coeffs_[i];
  return r;
}

Multivector Multivector::operator-(const Multivector& o) const {
  check_compatible(o);
  Multivector r(metric_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    r.coeffs_[i] = coeffs_[i] - o.coeffs_[i];
  return r;
}

Multivector Multivector::operator-() const {
  Multivector r(metric_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) r.coeffs_[i] = -coeffs_[i];
  return r;
}

Multivector Multivector::operator*(cplx s) const {
  Multivector r(metric_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) r.coeffs_[i] = coeffs_[i] * s;
  return r;
}

Multivector Multivector::operator*(const Multivector& o) const {
  check_compatible(o);
  Multivector r(metric_);
  const std::uint32_t nblades = static_cast<std::uint32_t>(coeffs_.size());
  for (std::uint32_t a = 0; a < nblades; ++a) {
    if (coeffs_[a] == cplx{0.0, 0.0}) continue;
    for (std::uint32_t b = 0; b < nblades; ++b) {
      if (o.coeffs_[b] == cplx{0.0, 0.0}) continue;
      const int s = blade_product_sign(metric_, a, b);
      r.coeffs_[a ^ b] += static_cast<double>(s) * coeffs_[a] * o.coeffs_[b];
    }
  }
  return r;
}

bool Multivector::near(const Multivector& o, double tol) const {
  check_compatible(o);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    if (std::abs(coeffs_[i] - o.coeffs_[i]) > tol) return false;
  return true;
}

bool Multivector::operator==(const Multivector& o) const {
  return metric_ == o.metric_ && coeffs_ == o.coeffs_;
}

Multivector gamma_top(const Metric& m) {
  const int n = m.dim();
  // i^{n(n-1)/2}
  cplx phase{1.0, 0.0};
  const int quarter = (n * (n - 1) / 2) % 4;
  constexpr cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  phase = i_pow[quarter];
  if (m.sigma() == -1) phase *= cplx{0.0, 1.0};
  const std::uint32_t all = (std::uint32_t{1} << n) - 1;
  return Multivector::blade(m, all, phase);
}

Multivector mv_exp(const Multivector& a, double tol) {
  if (!(tol > 0.0)) throw InvalidParameter("mv_exp: tol must be positive");
  const Metric& m = a.metric();
  Multivector sum = Multivector::scalar(m, 1.0);
  Multivector term = Multivector::scalar(m, 1.0);
  // ||xy||_max <= 2^n ||x||_max ||y||_max for the blade max-norm.
  const double cross = std::ldexp(1.0, m.dim());
  const int max_iter = 1000;
  for (int k = 1; k <= max_iter; ++k) {
    term = term * a;
    term = term * cplx(1.0 / static_cast<double>(k), 0.0);
    sum = sum + term;
    const double r = cross * a.max_abs() / static_cast<double>(k + 1);
    if (r < 1.0) {
      const double tail = term.max_abs() * r / (1.0 - r);
      if (tail < tol) return sum;
    }
  }
  throw ConvergenceFailure("mv_exp: series did not converge within cap");
}

Multivector sym_product(const Multivector& a, const Multivector& b) {
  return (a * b + b * a) * cplx(0.5, 0.0);
}

OperatorPair::OperatorPair(const Metric& m, double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0)) throw InvalidParameter("OperatorPair: kappa must be positive");
  const Multivector g = gamma_top(m);
  for (int i = 0; i < m.dim(); ++i) {
    p_hat_.push_back(Multivector::generator_upper(m, i) * g * cplx(kappa, 0.0));
    omega_hat_.push_back(g * Multivector::generator(m, i) * cplx(1.0 / kappa, 0.0));
  }
}

Multivector OperatorPair::compose(int i, int j) const {
  return sym_product(p_hat(i), omega_hat(j));
}

Multivector OperatorPair::commutator(int i, int j) const {
  return compose(i, j) - sym_product(omega_hat(j), p_hat(i));
}

} // namespace dwq::clifford
