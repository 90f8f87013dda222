#pragma once

// Crank-Nicolson time evolution and the noncommutative Ehrenfest relations.

#include <cstdio>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "hamiltonian.hpp"

namespace ncqm {

struct LinearSolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// BiCGSTAB for A x = b with A given as a callable; x holds the initial guess.
template <class Apply>
LinearSolveStats bicgstab(Apply&& a, const VectorXcd& b, VectorXcd& x, double tol, int max_iter) {
  LinearSolveStats st;
  const double bn = b.norm();
  if (bn == 0.0) {
    x.setZero();
    st.converged = true;
    return st;
  }
  VectorXcd r = b - a(x);
  const VectorXcd r0 = r;
  VectorXcd p = VectorXcd::Zero(b.size()), v = VectorXcd::Zero(b.size());
  cd rho = 1.0, alpha = 1.0, omega = 1.0;
  st.relative_residual = r.norm() / bn;
  if (st.relative_residual <= tol) {
    st.converged = true;
    return st;
  }
  for (int it = 1; it <= max_iter; ++it) {
    const cd rho_new = r0.dot(r);
    if (std::abs(rho_new) == 0.0) break;
    const cd beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    p = r + beta * (p - omega * v);
    v = a(p);
    alpha = rho / r0.dot(v);
    const VectorXcd s = r - alpha * v;
    if (s.norm() / bn <= tol) {
      x += alpha * p;
      st.iterations = it;
      st.relative_residual = s.norm() / bn;
      st.converged = true;
      return st;
    }
    const VectorXcd t = a(s);
    omega = t.dot(s) / t.squaredNorm();
    x += alpha * p + omega * s;
    r = s - omega * t;
    st.iterations = it;
    st.relative_residual = r.norm() / bn;
    if (st.relative_residual <= tol) {
      st.converged = true;
      return st;
    }
    if (omega == 0.0) break;
  }
  return st;
}

/// Position, NC position and momentum observables on a grid.
struct Observables {
  OperatorMatrix x1, x2;        // ordinary coordinates
  OperatorMatrix nc_x1, nc_x2;  // x_i - (i/2) theta_ij d_j
  OperatorMatrix p1, p2;

  Observables(const Grid2D& grid, const PhysParams& phys, ThetaTensor theta)
      : x1(grid), x2(grid), nc_x1(grid), nc_x2(grid), p1(grid), p2(grid) {
    const AxisMatrices ax = axis_matrices(grid, Axis::x), ay = axis_matrices(grid, Axis::y);
    x1 = OperatorMatrix::on_x(grid, Factor::from_real(ax.position, ax.position_diagonal));
    x2 = OperatorMatrix::on_y(grid, Factor::from_real(ay.position, ay.position_diagonal));
    p1 = OperatorMatrix::on_x(grid, Factor::from_real(ax.d1, false), -I * phys.hbar);
    p2 = OperatorMatrix::on_y(grid, Factor::from_real(ay.d1, false), -I * phys.hbar);
    std::tie(nc_x1, nc_x2) = nc_coordinates(grid, theta);
  }
};

inline cd expectation(const OperatorMatrix& obs, const WaveFunction& psi) {
  require(obs.grid() == psi.grid(), ErrorKind::shape, "observable and state live on different grids");
  return inner_product(psi, obs(psi)) / psi.norm_squared();
}

/// FNV-1a 64 of the canonical JSON form of a potential.
inline std::string potential_hash(const PolynomialPotential& v) {
  const std::string s = nlohmann::json(v).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct EvolveOptions {
  PhysParams phys{};
  ThetaTensor theta{};
  double tol = 1e-12;   // relative residual of each Crank-Nicolson solve
  int max_iter = 500;   // BiCGSTAB iterations per step
  bool store_states = true;
};

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<double> x1, x2, p1, p2, nc_x1, nc_x2, energy, norm;
  std::vector<WaveFunction> states;  // one per time when stored
  double dt = 0.0;
  double theta = 0.0;
  int max_solver_iterations = 0;

  std::size_t size() const { return times.size(); }
};

inline void write_trace_csv(std::ostream& os, const EvolutionTrace& tr) {
  os << "t,x1,x2,p1,p2,energy,norm\n";
  char buf[256];
  for (std::size_t i = 0; i < tr.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", tr.times[i], tr.x1[i], tr.x2[i],
                  tr.p1[i], tr.p2[i], tr.energy[i], tr.norm[i]);
    os << buf;
  }
}

inline nlohmann::json trace_metadata(const EvolutionTrace& tr, const Grid2D& grid, const PolynomialPotential& v) {
  double drift = 0.0, edrift = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    drift = std::max(drift, std::abs(tr.norm[i] - tr.norm[0]));
    edrift = std::max(edrift, std::abs(tr.energy[i] - tr.energy[0]) / std::max(std::abs(tr.energy[0]), 1e-300));
  }
  return {{"theta", tr.theta},
          {"dt", tr.dt},
          {"steps", tr.size() == 0 ? 0 : int(tr.size()) - 1},
          {"grid",
           {{"nx", grid.nx()}, {"ny", grid.ny()}, {"lx", grid.lx()}, {"ly", grid.ly()},
            {"boundary", to_string(grid.boundary())}}},
          {"potential_hash", potential_hash(v)},
          {"norm_drift", drift},
          {"energy_drift_relative", edrift},
          {"max_solver_iterations", tr.max_solver_iterations}};
}

/// (1 + i H dt / 2 hbar) psi_{n+1} = (1 - i H dt / 2 hbar) psi_n. A negative dt runs backwards.
inline EvolutionTrace evolve(const OperatorMatrix& h, const WaveFunction& psi0, double dt, int steps,
                             const EvolveOptions& opt = {}) {
  require(h.hermitian(), ErrorKind::hermiticity, "evolution needs a hermitian Hamiltonian");
  require(std::isfinite(dt) && dt != 0.0, ErrorKind::invalid_argument, "dt must be finite and nonzero");
  require(steps >= 0, ErrorKind::invalid_argument, "steps must be non-negative");
  require(h.grid() == psi0.grid(), ErrorKind::shape, "Hamiltonian and state live on different grids");
  opt.phys.validate();
  const Observables obs(psi0.grid(), opt.phys, opt.theta);
  EvolutionTrace tr;
  tr.dt = dt;
  tr.theta = opt.theta.value();

  auto record = [&](double t, const WaveFunction& psi) {
    tr.times.push_back(t);
    tr.x1.push_back(expectation(obs.x1, psi).real());
    tr.x2.push_back(expectation(obs.x2, psi).real());
    tr.nc_x1.push_back(expectation(obs.nc_x1, psi).real());
    tr.nc_x2.push_back(expectation(obs.nc_x2, psi).real());
    tr.p1.push_back(expectation(obs.p1, psi).real());
    tr.p2.push_back(expectation(obs.p2, psi).real());
    tr.energy.push_back(expectation(h, psi).real());
    tr.norm.push_back(psi.norm());
    if (opt.store_states) tr.states.push_back(psi);
  };

  const cd c = I * dt / (2.0 * opt.phys.hbar);
  auto lhs = [&](const VectorXcd& v) -> VectorXcd { return v + c * h.apply(v); };
  WaveFunction psi = psi0;
  record(0.0, psi);
  for (int n = 0; n < steps; ++n) {
    const VectorXcd hv = h.apply(psi.amplitudes());
    const VectorXcd rhs = psi.amplitudes() - c * hv;
    VectorXcd x = rhs - c * hv;  // explicit predictor
    const auto st = bicgstab(lhs, rhs, x, opt.tol, opt.max_iter);
    if (!st.converged)
      throw Error(ErrorKind::convergence, "Crank-Nicolson solve did not converge at step " + std::to_string(n + 1) +
                                              " (residual " + std::to_string(st.relative_residual) + ")");
    tr.max_solver_iterations = std::max(tr.max_solver_iterations, st.iterations);
    psi = WaveFunction(psi.grid(), std::move(x));
    record((n + 1) * dt, psi);
  }
  return tr;
}

enum class MomentumContraction {
  corrected,     // -(theta_jl / 2 hbar) <p_l d_j d_k V>
  printed_sign,  // +(theta_jl / 2 hbar) <p_l d_j d_k V>
  literal,       // +(theta_jl / 2 hbar) sum_{j,l} <p_l d_l d_j V>, no free index
};

inline const char* to_string(MomentumContraction c) {
  switch (c) {
    case MomentumContraction::corrected: return "corrected";
    case MomentumContraction::printed_sign: return "printed_sign";
    case MomentumContraction::literal: return "literal";
  }
  return "corrected";
}

struct EhrenfestResidual {
  // r_x[k][i], r_p[k][i] at interior sample i (times[i]); endpoints excluded
  std::vector<double> times;
  std::array<std::vector<double>, 2> r_x, r_p;
  // momentum residuals under the alternative contractions
  std::array<std::vector<double>, 2> r_p_printed_sign, r_p_literal;
  int stencil_order = 2;

  double max_x() const { return max_of(r_x); }
  double max_p() const { return max_of(r_p); }
  double max_abs() const { return std::max(max_x(), max_p()); }
  double max_p_printed_sign() const { return max_of(r_p_printed_sign); }
  double max_p_literal() const { return max_of(r_p_literal); }

 private:
  static double max_of(const std::array<std::vector<double>, 2>& a) {
    double m = 0.0;
    for (const auto& v : a)
      for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

inline void to_json(nlohmann::json& j, const EhrenfestResidual& r) {
  j = {{"max_residual", r.max_abs()},
       {"max_residual_x", r.max_x()},
       {"max_residual_p", r.max_p()},
       {"max_residual_p_printed_sign", r.max_p_printed_sign()},
       {"max_residual_p_literal", r.max_p_literal()},
       {"stencil_order", r.stencil_order}};
}

/// Centred differences of <x_k>, <p_k> minus
///   <p_k>/m - (theta_kl / 2 hbar) <d_l V>            (position, ordinary x_k)
///   -<d_k V> -/+ (theta_jl / 2 hbar) <p_l d_j d_k V>  (momentum)
/// with <p f> symmetrized as Re <psi| f p |psi>.
inline EhrenfestResidual ehrenfest_residuals(const EvolutionTrace& tr, const PolynomialPotential& v, ThetaTensor theta,
                                             const PhysParams& phys) {
  require(tr.size() >= 3, ErrorKind::invalid_argument, "Ehrenfest residuals need at least 3 samples");
  require(tr.states.size() == tr.size(), ErrorKind::invalid_argument, "trace has no stored states");
  require(v.is_real(), ErrorKind::invalid_argument, "potential must be real");
  const Grid2D& grid = tr.states.front().grid();
  const Observables obs(grid, phys, theta);
  const ThetaTensor zero{};
  const Axis axes[2] = {Axis::x, Axis::y};
  std::array<OperatorMatrix, 2> dv{discrete_potential(v.derivative(Axis::x), grid, zero),
                                   discrete_potential(v.derivative(Axis::y), grid, zero)};
  std::vector<std::vector<OperatorMatrix>> d2v(2);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      d2v[size_t(j)].push_back(discrete_potential(v.derivative(axes[j]).derivative(axes[k]), grid, zero));
  const OperatorMatrix* p[2] = {&obs.p1, &obs.p2};
  const double m = phys.mass, hb = phys.hbar;
  const double dt = tr.dt;

  EhrenfestResidual out;
  for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
    const WaveFunction& psi = tr.states[i];
    const double n2 = psi.norm_squared();
    double gv[2], pp[2];
    for (int k = 0; k < 2; ++k) {
      gv[k] = expectation(dv[size_t(k)], psi).real();
      pp[k] = expectation(*p[k], psi).real();
    }
    // s[j][k][l] = Re <psi| (d_j d_k V) p_l |psi>
    double s[2][2][2];
    for (int l = 0; l < 2; ++l) {
      const WaveFunction pl = (*p[l])(psi);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) s[j][k][l] = inner_product(psi, d2v[size_t(j)][size_t(k)](pl)).real() / n2;
    }
    out.times.push_back(tr.times[i]);
    const double dx[2] = {(tr.x1[i + 1] - tr.x1[i - 1]) / (2 * dt), (tr.x2[i + 1] - tr.x2[i - 1]) / (2 * dt)};
    const double dp[2] = {(tr.p1[i + 1] - tr.p1[i - 1]) / (2 * dt), (tr.p2[i + 1] - tr.p2[i - 1]) / (2 * dt)};
    double literal = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) literal += theta(j, l) / (2 * hb) * s[l][j][l];
    for (int k = 0; k < 2; ++k) {
      double xr = pp[k] / m;
      for (int l = 0; l < 2; ++l) xr -= theta(k, l) / (2 * hb) * gv[l];
      double corr = 0.0;
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) corr += theta(j, l) / (2 * hb) * s[j][k][l];
      out.r_x[size_t(k)].push_back(dx[k] - xr);
      out.r_p[size_t(k)].push_back(dp[k] - (-gv[k] - corr));
      out.r_p_printed_sign[size_t(k)].push_back(dp[k] - (-gv[k] + corr));
      out.r_p_literal[size_t(k)].push_back(dp[k] - (-gv[k] + literal));
    }
  }
  return out;
}

}  // namespace ncqm
