#include "dwq/poly.hpp"

#include <cmath>
#include <sstream>

namespace dwq::gradedforms {

int Monomial::degree() const {
  int d = 0;
  for (const auto& [v, e] : factors) d += e;
  return d;
}

int Monomial::exponent(int var) const {
  for (const auto& [v, e] : factors)
    if (v == var) return e;
  return 0;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  Monomial r;
  auto ia = a.factors.begin(), ib = b.factors.begin();
  while (ia != a.factors.end() || ib != b.factors.end()) {
    if (ib == b.factors.end() || (ia != a.factors.end() && ia->first < ib->first)) {
      r.factors.push_back(*ia++);
    } else if (ia == a.factors.end() || ib->first < ia->first) {
      r.factors.push_back(*ib++);
    } else {
      r.factors.emplace_back(ia->first, ia->second + ib->second);
      ++ia;
      ++ib;
    }
  }
  return r;
}

Poly Poly::constant(Rat c) {
  Poly p;
  p.add_term(Monomial{}, c);
  return p;
}

Poly Poly::constant(long num, long den) {
  Rat c(num, den);
  c.canonicalize();
  return constant(c);
}

Poly Poly::variable(int var) {
  Poly p;
  Monomial m;
  m.factors.emplace_back(var, 1);
  p.add_term(m, Rat(1));
  return p;
}

int Poly::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

void Poly::add_term(const Monomial& m, const Rat& c) {
  if (c == 0) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
  } else {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r += o;
  return r;
}

Poly& Poly::operator+=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Poly Poly::operator-(const Poly& o) const {
  Poly r = *this;
  r -= o;
  return r;
}

Poly& Poly::operator-=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Poly Poly::operator-() const {
  Poly r;
  for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) r.add_term(ma * mb, ca * cb);
  return r;
}

Poly Poly::pow(int k) const {
  if (k < 0) throw InvalidParameter("Poly::pow: negative exponent");
  Poly r = constant(1);
  for (int i = 0; i < k; ++i) r = r * *this;
  return r;
}

Poly Poly::derivative(int var) const {
  Poly r;
  for (const auto& [m, c] : terms_) {
    const int e = m.exponent(var);
    if (e == 0) continue;
    Monomial dm;
    for (const auto& [v, ve] : m.factors) {
      if (v == var) {
        if (ve > 1) dm.factors.emplace_back(v, ve - 1);
      } else {
        dm.factors.emplace_back(v, ve);
      }
    }
    r.add_term(dm, c * e);
  }
  return r;
}

double Poly::eval(std::span<const double> values) const {
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c.get_d();
    for (const auto& [v, e] : m.factors)
      t *= std::pow(values[static_cast<std::size_t>(v)], e);
    sum += t;
  }
  return sum;
}

Rat Poly::eval_exact(const std::map<int, Rat>& values) const {
  Rat sum(0);
  for (const auto& [m, c] : terms_) {
    Rat t = c;
    for (const auto& [v, e] : m.factors) {
      auto it = values.find(v);
      if (it == values.end())
        throw InvalidParameter("Poly::eval_exact: missing variable value");
      for (int k = 0; k < e; ++k) t *= it->second;
    }
    sum += t;
  }
  return sum;
}

std::string Poly::str(const std::function<std::string(int)>& var_name) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    Rat a = c;
    if (first) {
      if (a < 0) {
        os << "-";
        a = -a;
      }
    } else {
      os << (a < 0 ? " - " : " + ");
      if (a < 0) a = -a;
    }
    first = false;
    const bool unit_coeff = (a == 1) && !m.factors.empty();
    if (!unit_coeff) os << a.get_str();
    bool star = !unit_coeff;
    for (const auto& [v, e] : m.factors) {
      if (star) os << "*";
      os << var_name(v);
      if (e > 1) os << "^" << e;
      star = true;
    }
  }
  return os.str();
}

} // namespace dwq::gradedforms
