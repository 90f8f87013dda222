#pragma once

// Special functions used by the reference solutions: Airy Ai and Ai',
// Hermite polynomials, Kummer's 1F1 and Gauss-Hermite rules.

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"

namespace ncqm {

namespace detail {

inline constexpr long double airy_c1 = 0.355028053887817239260063186004183176L;  // Ai(0)
inline constexpr long double airy_c2 = 0.258819403792806798405183560189203963L;  // -Ai'(0)
inline constexpr double airy_switch = 8.0;

struct AiryPair {
  double ai, aip;
};

// Maclaurin series in extended precision; good to ~1e-12 absolute for |x| <= 8.
inline AiryPair airy_series(double xd) {
  const long double x = xd, x3 = x * x * x;
  long double f = 1, g = x, fp = 0, gp = 1;
  long double a = 1, b = x;  // current terms of f and g
  for (int k = 1; k < 200; ++k) {
    a *= x3 / ((3.0L * k) * (3.0L * k - 1));
    b *= x3 / ((3.0L * k) * (3.0L * k + 1));
    f += a;
    g += b;
    if (x != 0) {
      fp += a * 3.0L * k / x;
      gp += b * (3.0L * k + 1) / x;
    }
    if (std::fabs(a) + std::fabs(b) < 1e-30L * (std::fabs(f) + std::fabs(g))) break;
  }
  return {double(airy_c1 * f - airy_c2 * g), double(airy_c1 * fp - airy_c2 * gp)};
}

// Coefficients u_k of the Airy asymptotic series and the matching v_k for Ai'.
inline void airy_u_v(int n, std::vector<double>& u, std::vector<double>& v) {
  u.assign(n, 1.0);
  v.assign(n, 1.0);
  for (int k = 1; k < n; ++k) {
    u[k] = u[k - 1] * (6.0 * k - 5) * (6.0 * k - 3) * (6.0 * k - 1) / ((2.0 * k - 1) * 216.0 * k);
    v[k] = -(6.0 * k + 1) / (6.0 * k - 1) * u[k];
  }
}

inline AiryPair airy_asymptotic(double x) {
  std::vector<double> u, v;
  airy_u_v(40, u, v);
  const double z = std::fabs(x);
  const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
  const double q = std::pow(z, 0.25);
  const double sqpi = std::sqrt(pi);
  if (x > 0) {
    double su = 0, sv = 0, t = 1;
    double last = INFINITY;
    for (int k = 0; k < 40; ++k) {
      const double tu = u[k] * t, tv = v[k] * t;
      if (std::fabs(tu) > last) break;  // stop at the smallest term
      last = std::fabs(tu);
      su += tu;
      sv += tv;
      t *= -1.0 / zeta;
    }
    const double e = std::exp(-zeta) / (2.0 * sqpi);
    return {e / q * su, -e * q * sv};
  }
  // oscillatory side: even and odd parts of the series
  double ue = 0, uo = 0, ve = 0, vo = 0, t = 1;
  double last = INFINITY;
  for (int k = 0; k < 40; ++k) {
    const double tu = u[k] * t, tv = v[k] * t;
    if (std::fabs(tu) > last) break;
    last = std::fabs(tu);
    const double sgn = (k / 2) % 2 == 0 ? 1.0 : -1.0;
    if (k % 2 == 0) {
      ue += sgn * tu;
      ve += sgn * tv;
    } else {
      uo += sgn * tu;
      vo += sgn * tv;
    }
    t /= zeta;
  }
  const double ph = zeta - pi / 4;
  const double c = std::cos(ph), s = std::sin(ph);
  return {(c * ue + s * uo) / (sqpi * q), q / sqpi * (s * ve - c * vo)};
}

inline AiryPair airy(double x) {
  require(std::isfinite(x), ErrorKind::invalid_argument, "airy argument must be finite");
  return std::fabs(x) <= airy_switch ? airy_series(x) : airy_asymptotic(x);
}

}  // namespace detail

inline double airy_ai(double x) { return detail::airy(x).ai; }
inline double airy_ai_prime(double x) { return detail::airy(x).aip; }

/// Physicists' Hermite polynomial by the three-term recurrence.
inline double hermite_poly(int n, double x) {
  require(n >= 0, ErrorKind::invalid_argument, "hermite order must be non-negative");
  double h0 = 1.0, h1 = 2.0 * x;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Confluent hypergeometric 1F1(a; b; z). Exact polynomial when a is a
/// non-positive integer; otherwise the series, with Kummer's transformation
/// for z < 0.
inline double kummer_1f1(double a, double b, double z) {
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(z), ErrorKind::invalid_argument,
          "1F1 arguments must be finite");
  require(!(b <= 0 && b == std::floor(b)), ErrorKind::invalid_argument, "1F1 needs b not a non-positive integer");
  const bool terminating = a <= 0 && a == std::floor(a);
  if (!terminating && z < 0) return std::exp(z) * kummer_1f1(b - a, b, -z);
  double sum = 1.0, term = 1.0;
  for (int k = 0; k < 100000; ++k) {
    term *= (a + k) / (b + k) * z / (k + 1);
    sum += term;
    if (term == 0.0) break;
    if (!terminating && std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return sum;
}

struct GaussHermiteRule {
  VectorXd nodes;
  VectorXd weights;  // for weight e^{-x^2}
};

namespace detail {

// Orthonormal Hermite functions p_0..p_n at x (weight e^{-x^2}).
inline VectorXd orthonormal_hermite(int n, double x) {
  VectorXd p(n + 1);
  p[0] = std::pow(pi, -0.25);
  if (n >= 1) p[1] = x * std::sqrt(2.0) * p[0];
  for (int k = 1; k < n; ++k) p[k + 1] = x * std::sqrt(2.0 / (k + 1)) * p[k] - std::sqrt(double(k) / (k + 1)) * p[k - 1];
  return p;
}

}  // namespace detail

/// n-point rule: Golub-Welsch nodes refined by Newton, Christoffel weights.
inline GaussHermiteRule gauss_hermite_rule(int n) {
  require(n >= 1 && n <= 400, ErrorKind::invalid_argument, "Gauss-Hermite point count must be in [1, 400]");
  MatrixXd j = MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(j, Eigen::EigenvaluesOnly);
  GaussHermiteRule r{es.eigenvalues(), VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    double x = r.nodes[i];
    for (int it = 0; it < 4; ++it) {
      const VectorXd p = detail::orthonormal_hermite(n, x);
      const double d = std::sqrt(2.0 * n) * p[n - 1];
      if (d == 0.0) break;
      x -= p[n] / d;
    }
    r.nodes[i] = x;
    const VectorXd p = detail::orthonormal_hermite(n - 1, x);
    r.weights[i] = 1.0 / p.squaredNorm();
  }
  return r;
}

}  // namespace ncqm
