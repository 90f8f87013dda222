#pragma once

// First-order perturbation theory for the NC anharmonic oscillator, the
// published closed forms, and Gauss-Hermite checks of the Hermite integrals.

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hamiltonian.hpp"
#include "spectra.hpp"

namespace ncqm {

struct PerturbationSetup {
  QuantumNumbers q{};
  double omega = 1.0;
  ThetaTensor theta{};
  double alpha_c = 0.0;
  double gamma = 0.0;

  void validate() const {
    require(std::isfinite(omega) && omega > 0, ErrorKind::invalid_argument, "omega must be positive");
    require(std::isfinite(gamma) && gamma >= 0, ErrorKind::invalid_argument, "gamma must be non-negative");
    require(std::isfinite(alpha_c), ErrorKind::invalid_argument, "alpha_c must be finite");
  }
};

/// Integrand e^{-x^2/2} H_n(x) x^power d^derivative (e^{-x^2/2} H_m(x)); with
/// derivative = 0 this is x^power e^{-x^2} H_n H_m.
struct HermiteIntegrand {
  int power = 0;
  int n = 0;
  int m = 0;
  int derivative = 0;

  int degree() const { return power + n + m + derivative; }
};

struct QuadratureValue {
  double value = 0.0;
  bool exact = true;  // npoints high enough for the polynomial degree
};

namespace detail {

// log of sqrt(sqrt(pi) 2^n n!), the norm of H_n under e^{-x^2}
inline double log_hermite_norm(int n) {
  return 0.5 * (0.5 * std::log(pi) + n * std::log(2.0) + std::lgamma(n + 1.0));
}

// Coefficients c_j with d^k (e^{-x^2/2} p_m) = sum_j c_j e^{-x^2/2} p_j (orthonormal p_j).
inline VectorXd derivative_coefficients(int m, int k) {
  VectorXd c = VectorXd::Zero(m + k + 1);
  c[m] = 1.0;
  for (int step = 0; step < k; ++step) {
    VectorXd d = VectorXd::Zero(c.size());
    for (int j = 0; j < c.size(); ++j) {
      if (c[j] == 0.0) continue;
      if (j >= 1) d[j - 1] += c[j] * std::sqrt(j / 2.0);
      if (j + 1 < c.size()) d[j + 1] -= c[j] * std::sqrt((j + 1) / 2.0);
    }
    c = d;
  }
  return c;
}

}  // namespace detail

inline QuadratureValue gauss_hermite_integral(const HermiteIntegrand& f, int npoints) {
  require(f.power >= 0 && f.n >= 0 && f.m >= 0 && f.derivative >= 0, ErrorKind::invalid_argument,
          "integrand indices must be non-negative");
  const GaussHermiteRule rule = gauss_hermite_rule(npoints);
  const VectorXd c = detail::derivative_coefficients(f.m, f.derivative);
  const int top = std::max<int>(f.n, int(c.size()) - 1);
  double s = 0.0;
  for (int i = 0; i < npoints; ++i) {
    const double x = rule.nodes[i];
    const VectorXd p = detail::orthonormal_hermite(top, x);
    double q = 0.0;
    for (int j = 0; j < c.size(); ++j) q += c[j] * p[j];
    s += rule.weights[i] * std::pow(x, f.power) * p[f.n] * q;
  }
  const double scale = std::exp(detail::log_hermite_norm(f.n) + detail::log_hermite_norm(f.m));
  return {s * scale, 2 * npoints - 1 >= f.degree()};
}

/// One of the published closed forms, tested against quadrature.
struct IntegralIdentity {
  std::string id;
  int min_n = 0;
  HermiteIntegrand (*integrand)(int n);
  double (*paper)(int n);
};

inline std::vector<IntegralIdentity> paper_integral_identities() {
  // sqrt(pi) 2^n n!
  static constexpr auto h = [](int n) { return std::sqrt(pi) * std::pow(2.0, n) * std::tgamma(n + 1.0); };
  return {
      {"orthogonality", 0, [](int n) { return HermiteIntegrand{0, n, n, 0}; }, [](int n) { return h(n); }},
      {"orthogonality_offdiag", 0, [](int n) { return HermiteIntegrand{0, n, n + 1, 0}; }, [](int) { return 0.0; }},
      {"x_Hn_Hn+1", 0, [](int n) { return HermiteIntegrand{1, n, n + 1, 0}; }, [](int n) { return h(n) * (n + 1); }},
      {"x_Hn_Hn-1", 1, [](int n) { return HermiteIntegrand{1, n, n - 1, 0}; }, [](int n) { return h(n) * 0.5; }},
      {"x2_Hn_Hn", 0, [](int n) { return HermiteIntegrand{2, n, n, 0}; }, [](int n) { return h(n) * (n + 0.5); }},
      {"x2_Hn_Hn+2", 0, [](int n) { return HermiteIntegrand{2, n, n + 2, 0}; },
       [](int n) { return h(n) * (n + 2.0) * (n + 1.0); }},
      {"x2_Hn_Hn-2", 2, [](int n) { return HermiteIntegrand{2, n, n - 2, 0}; }, [](int n) { return h(n) * 0.25; }},
      {"x3_Hn2", 0, [](int n) { return HermiteIntegrand{3, n, n, 0}; }, [](int) { return 0.0; }},
      {"x3_Hn_Hn-1", 1, [](int n) { return HermiteIntegrand{3, n, n - 1, 0}; },
       [](int n) { return 3.0 * std::sqrt(pi) * std::pow(2.0, n - 2) * n * n * std::tgamma(double(n)); }},
      {"x4_Hn2", 0, [](int n) { return HermiteIntegrand{4, n, n, 0}; },
       [](int n) { return 3.0 * std::sqrt(pi) * std::pow(2.0, n - 2) * (2.0 * n * n + 2.0 * n + 1) * std::tgamma(n + 1.0); }},
      {"d2", 0, [](int n) { return HermiteIntegrand{0, n, n, 2}; }, [](int n) { return h(n) * (n - 0.5); }},
      {"d4", 0, [](int n) { return HermiteIntegrand{0, n, n, 4}; },
       [](int n) { return 1.5 * h(n) * (3.0 * n * n - 7.0 * n + 0.5); }},
  };
}

struct IdentityEntry {
  int n = 0;
  double paper = 0.0;
  double oracle = 0.0;
  double difference = 0.0;           // paper - oracle
  double relative_difference = 0.0;  // |difference| / (sqrt(pi) 2^n n!)
  bool agree = false;
};

struct IdentityReport {
  std::string id;
  std::vector<IdentityEntry> entries;

  bool all_agree() const {
    return std::all_of(entries.begin(), entries.end(), [](const IdentityEntry& e) { return e.agree; });
  }
  std::vector<int> mismatches() const {
    std::vector<int> out;
    for (const auto& e : entries)
      if (!e.agree) out.push_back(e.n);
    return out;
  }
};

struct ErrataReport {
  int max_n = 0;
  double tolerance = 1e-10;
  std::vector<IdentityReport> identities;

  const IdentityReport& at(const std::string& id) const {
    for (const auto& r : identities)
      if (r.id == id) return r;
    throw Error(ErrorKind::invalid_argument, "no identity named " + id);
  }
};

inline void to_json(nlohmann::json& j, const IdentityEntry& e) {
  j = {{"n", e.n},
       {"paper", e.paper},
       {"oracle", e.oracle},
       {"difference", e.difference},
       {"relative_difference", e.relative_difference},
       {"agree", e.agree}};
}

inline void to_json(nlohmann::json& j, const IdentityReport& r) {
  j = {{"id", r.id}, {"entries", r.entries}, {"all_agree", r.all_agree()}, {"mismatch_n", r.mismatches()}};
}

inline void to_json(nlohmann::json& j, const ErrataReport& r) {
  j = {{"max_n", r.max_n}, {"tolerance", r.tolerance}, {"identities", r.identities}};
}

/// Paper closed forms vs quadrature for n <= max_n. Disagreements are data
/// (errata), not failures.
inline ErrataReport verify_integral_identities(int max_n, double tol = 1e-10) {
  require(max_n >= 0 && max_n <= 20, ErrorKind::invalid_argument, "max_n must be in [0, 20]");
  ErrataReport rep;
  rep.max_n = max_n;
  rep.tolerance = tol;
  for (const auto& ident : paper_integral_identities()) {
    IdentityReport r{ident.id, {}};
    for (int n = ident.min_n; n <= max_n; ++n) {
      const HermiteIntegrand f = ident.integrand(n);
      const QuadratureValue q = gauss_hermite_integral(f, f.degree() / 2 + 2);
      IdentityEntry e;
      e.n = n;
      e.paper = ident.paper(n);
      e.oracle = q.value;
      e.difference = e.paper - e.oracle;
      e.relative_difference = std::abs(e.difference) / std::exp(2.0 * detail::log_hermite_norm(n));
      e.agree = e.relative_difference <= tol;
      r.entries.push_back(e);
    }
    rep.identities.push_back(std::move(r));
  }
  return rep;
}

/// The published first-order correction, transcribed as printed.
inline double paper_delta_e(const PerturbationSetup& s) {
  s.validate();
  const double w = s.omega, t = s.theta.value();
  const double beta = StiffnessBeta(w, s.theta).beta;
  const double n1 = s.q.n1, n2 = s.q.n2;
  return s.gamma * (3.0 * beta / (2.0 * std::pow(w, 3.5)) * (n1 * n1 + n2 * n2 + n1 + n2 + 1) -
                    1.5 * t * t * ((n1 + 0.5) * (n2 - 0.5) + (n1 - 0.5) * (n2 + 0.5)) +
                    3.0 * std::pow(t, 4) * std::pow(w, 4) / (32.0 * beta) *
                        (3.0 * (n2 * n2 + n1 * n1) - 7.0 * (n2 + n1) + 1));
}

struct ShiftResult {
  double shift = 0.0;
  double cubic_part = 0.0;
  double quartic_part = 0.0;
  double change_on_refinement = 0.0;  // |shift(M + 2) - shift(M)|
  bool converged = true;
};

inline void to_json(nlohmann::json& j, const ShiftResult& r) {
  j = {{"shift", r.shift},
       {"cubic_part", r.cubic_part},
       {"quartic_part", r.quartic_part},
       {"change_on_refinement", r.change_on_refinement},
       {"converged", r.converged}};
}

namespace detail {

inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

// <n1 n2| x1^3 + x2^3 |n1 n2> and the quartic analogue in a Fock basis of
// length s = beta^(1/4)/omega, so that the Hermite-Gauss eigenstate is |n1>|n2>.
inline std::pair<double, double> fock_moments(const PerturbationSetup& s, int size) {
  const double beta = StiffnessBeta(s.omega, s.theta).beta;
  const double len = std::pow(beta, 0.25) / s.omega;
  MatrixXcd a = MatrixXcd::Zero(size, size);
  for (int j = 1; j < size; ++j) a(j - 1, j) = std::sqrt(double(j));
  const MatrixXcd x = len / std::sqrt(2.0) * (a + a.adjoint());
  const MatrixXcd d = 1.0 / (len * std::sqrt(2.0)) * (a - a.adjoint());
  const MatrixXcd id = MatrixXcd::Identity(size, size);
  const double t = s.theta.value();
  // index = n2 * size + n1
  const MatrixXcd x1 = kron(id, x) - 0.5 * I * t * kron(d, id);
  const MatrixXcd x2 = kron(x, id) + 0.5 * I * t * kron(id, d);
  const int k = s.q.n2 * size + s.q.n1;
  auto diag = [&](const MatrixXcd& m, int power) {
    VectorXcd v = VectorXcd::Zero(size * size);
    v[k] = 1.0;
    for (int p = 0; p < power; ++p) v = m * v;
    return v[k].real();
  };
  return {diag(x1, 3) + diag(x2, 3), diag(x1, 4) + diag(x2, 4)};
}

}  // namespace detail

/// <Psi0| alpha_c (x1^3 + x2^3) + gamma (x1^4 + x2^4) |Psi0> with Psi0 the
/// Hermite-Gauss state, in a truncated product Hermite basis.
inline ShiftResult first_order_shift(const PerturbationSetup& s, int basis_size = 12) {
  s.validate();
  require(basis_size >= std::max(s.q.n1, s.q.n2) + 5, ErrorKind::invalid_argument,
          "basis_size must be at least max(n1, n2) + 5");
  auto eval = [&](int size) {
    auto [m3, m4] = detail::fock_moments(s, size);
    return std::make_pair(s.alpha_c * m3, s.gamma * m4);
  };
  const auto [c, q] = eval(basis_size);
  const auto [c2, q2] = eval(basis_size + 2);
  ShiftResult r;
  r.cubic_part = c;
  r.quartic_part = q;
  r.shift = c + q;
  r.change_on_refinement = std::abs((c2 + q2) - r.shift);
  r.converged = r.change_on_refinement <= 1e-8;
  return r;
}

/// <psi| Delta H |psi> on the grid for any state, e.g. a dense-solver eigenvector.
inline double first_order_shift_state(const PerturbationSetup& s, const WaveFunction& psi) {
  s.validate();
  const OperatorMatrix dh = discrete_potential(PolynomialPotential::anharmonic(s.alpha_c, s.gamma), psi.grid(), s.theta);
  return (inner_product(psi, dh(psi)) / psi.norm_squared()).real();
}

struct SlopeResult {
  double slope = 0.0;  // Richardson estimate of dE/dgamma at gamma = 0
  double e0 = 0.0, e1 = 0.0, e2 = 0.0;
  double gamma_step = 0.0;
};

/// Ground-level dE/dgamma from dense diagonalization at gamma = 0, g, 2g.
inline SlopeResult dense_gamma_slope(double omega, ThetaTensor theta, const Grid2D& grid, double gamma_step,
                                     int level = 0) {
  require(gamma_step > 0, ErrorKind::invalid_argument, "gamma_step must be positive");
  auto energy = [&](double g) {
    const OperatorMatrix h = build_anharmonic_hamiltonian(omega, 0.0, g, grid, PhysParams{}, theta);
    return solve_eigen(h, level + 1, EigenMethod::dense).eigenvalues[level];
  };
  SlopeResult r;
  r.gamma_step = gamma_step;
  r.e0 = energy(0.0);
  r.e1 = energy(gamma_step);
  r.e2 = energy(2 * gamma_step);
  r.slope = (4.0 * (r.e1 - r.e0) - (r.e2 - r.e0)) / (2.0 * gamma_step);
  return r;
}

}  // namespace ncqm
