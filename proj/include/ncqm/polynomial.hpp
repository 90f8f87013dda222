#pragma once

#include <map>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "core.hpp"

namespace ncqm {

/// V(x,y) = sum c_ab x^a y^b with complex coefficients.
class PolynomialPotential {
 public:
  using Monomial = std::pair<int, int>;

  PolynomialPotential() = default;

  static PolynomialPotential monomial(int ax, int ay, cd c = 1.0) {
    PolynomialPotential p;
    p.add(ax, ay, c);
    return p;
  }
  static PolynomialPotential linear(double alpha, double beta) {
    PolynomialPotential p;
    p.add(1, 0, alpha);
    p.add(0, 1, beta);
    return p;
  }
  /// (wx^2 x^2 + wy^2 y^2) / 2
  static PolynomialPotential harmonic(double wx, double wy) {
    PolynomialPotential p;
    p.add(2, 0, 0.5 * wx * wx);
    p.add(0, 2, 0.5 * wy * wy);
    return p;
  }
  /// alpha_c (x^3 + y^3) + gamma (x^4 + y^4)
  static PolynomialPotential anharmonic(double alpha_c, double gamma) {
    PolynomialPotential p;
    p.add(3, 0, alpha_c);
    p.add(0, 3, alpha_c);
    p.add(4, 0, gamma);
    p.add(0, 4, gamma);
    return p;
  }

  void add(int ax, int ay, cd c) {
    require(ax >= 0 && ay >= 0, ErrorKind::invalid_argument, "negative monomial exponent");
    require(std::isfinite(c.real()) && std::isfinite(c.imag()), ErrorKind::invalid_argument,
            "non-finite coefficient");
    if (c == 0.0) return;
    auto& slot = coeffs_[{ax, ay}];
    slot += c;
    if (slot == 0.0) coeffs_.erase({ax, ay});
  }

  cd coeff(int ax, int ay) const {
    auto it = coeffs_.find({ax, ay});
    return it == coeffs_.end() ? cd(0.0) : it->second;
  }
  const std::map<Monomial, cd>& coefficients() const { return coeffs_; }
  bool empty() const { return coeffs_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [m, c] : coeffs_) d = std::max(d, m.first + m.second);
    return d;
  }
  int degree_x() const {
    int d = -1;
    for (const auto& [m, c] : coeffs_) d = std::max(d, m.first);
    return d;
  }
  int degree_y() const {
    int d = -1;
    for (const auto& [m, c] : coeffs_) d = std::max(d, m.second);
    return d;
  }
  bool is_real() const {
    for (const auto& [m, c] : coeffs_)
      if (c.imag() != 0.0) return false;
    return true;
  }

  double alpha() const { return coeff(1, 0).real(); }
  double beta() const { return coeff(0, 1).real(); }
  double omega_x() const { return std::sqrt(2.0 * coeff(2, 0).real()); }
  double omega_y() const { return std::sqrt(2.0 * coeff(0, 2).real()); }
  double alpha_c() const { return coeff(3, 0).real(); }
  double gamma() const { return coeff(4, 0).real(); }

  cd operator()(double x, double y) const {
    cd s = 0.0;
    for (const auto& [m, c] : coeffs_) s += c * std::pow(x, m.first) * std::pow(y, m.second);
    return s;
  }

  PolynomialPotential derivative(Axis a, int order = 1) const {
    PolynomialPotential d;
    for (const auto& [m, c] : coeffs_) {
      int e = a == Axis::x ? m.first : m.second;
      if (e < order) continue;
      double f = 1.0;
      for (int k = 0; k < order; ++k) f *= e - k;
      if (a == Axis::x) d.add(m.first - order, m.second, c * f);
      else d.add(m.first, m.second - order, c * f);
    }
    return d;
  }

  PolynomialPotential& operator+=(const PolynomialPotential& o) {
    for (const auto& [m, c] : o.coeffs_) add(m.first, m.second, c);
    return *this;
  }
  PolynomialPotential& operator-=(const PolynomialPotential& o) {
    for (const auto& [m, c] : o.coeffs_) add(m.first, m.second, -c);
    return *this;
  }
  PolynomialPotential& operator*=(cd s) {
    if (s == 0.0) coeffs_.clear();
    for (auto& [m, c] : coeffs_) c *= s;
    return *this;
  }
  friend PolynomialPotential operator+(PolynomialPotential a, const PolynomialPotential& b) { return a += b; }
  friend PolynomialPotential operator-(PolynomialPotential a, const PolynomialPotential& b) { return a -= b; }
  friend PolynomialPotential operator*(cd s, PolynomialPotential a) { return a *= s; }
  friend PolynomialPotential operator*(const PolynomialPotential& a, const PolynomialPotential& b) {
    PolynomialPotential r;
    for (const auto& [m, c] : a.coeffs_)
      for (const auto& [n, d] : b.coeffs_) r.add(m.first + n.first, m.second + n.second, c * d);
    return r;
  }
  friend bool operator==(const PolynomialPotential& a, const PolynomialPotential& b) {
    return a.coeffs_ == b.coeffs_;
  }

  /// Largest |coefficient difference| against another polynomial.
  double max_abs_diff(const PolynomialPotential& o) const {
    double m = 0.0;
    for (const auto& [k, c] : (*this - o).coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  std::map<Monomial, cd> coeffs_;
};

// {"monomials": [{"ax":1,"ay":0,"re":..,"im":..}], "linear": {...}, "harmonic": {...},
//  "anharmonic": {...}}; every part is optional and the parts add up.
inline void to_json(nlohmann::json& j, const PolynomialPotential& p) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [m, c] : p.coefficients())
    list.push_back({{"ax", m.first}, {"ay", m.second}, {"re", c.real()}, {"im", c.imag()}});
  j = nlohmann::json{{"monomials", list}};
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), ErrorKind::invalid_argument, where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* allowed : keys) ok = ok || k == allowed;
    require(ok, ErrorKind::invalid_argument, "unknown key '" + k + "' in " + where);
  }
}

inline double number_at(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number(), ErrorKind::invalid_argument, std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, PolynomialPotential& p) {
  detail::reject_unknown(j, {"monomials", "linear", "harmonic", "anharmonic"}, "potential");
  p = PolynomialPotential{};
  if (j.contains("monomials")) {
    require(j.at("monomials").is_array(), ErrorKind::invalid_argument, "'monomials' must be an array");
    for (const auto& m : j.at("monomials")) {
      detail::reject_unknown(m, {"ax", "ay", "re", "im"}, "monomial");
      require(m.contains("ax") && m.contains("ay") && m.at("ax").is_number_integer() &&
                  m.at("ay").is_number_integer(),
              ErrorKind::invalid_argument, "monomial needs integer 'ax' and 'ay'");
      p.add(m.at("ax").get<int>(), m.at("ay").get<int>(),
            cd(detail::number_at(m, "re", 0.0), detail::number_at(m, "im", 0.0)));
    }
  }
  if (j.contains("linear")) {
    const auto& l = j.at("linear");
    detail::reject_unknown(l, {"alpha", "beta"}, "linear");
    p += PolynomialPotential::linear(detail::number_at(l, "alpha", 0.0), detail::number_at(l, "beta", 0.0));
  }
  if (j.contains("harmonic")) {
    const auto& h = j.at("harmonic");
    detail::reject_unknown(h, {"wx", "wy"}, "harmonic");
    p += PolynomialPotential::harmonic(detail::number_at(h, "wx", 0.0), detail::number_at(h, "wy", 0.0));
  }
  if (j.contains("anharmonic")) {
    const auto& a = j.at("anharmonic");
    detail::reject_unknown(a, {"alpha_c", "gamma"}, "anharmonic");
    p += PolynomialPotential::anharmonic(detail::number_at(a, "alpha_c", 0.0), detail::number_at(a, "gamma", 0.0));
  }
}

}  // namespace ncqm
