#pragma once

// Generators of the exotic Galilei algebra on a periodic grid, commutator
// checks by action on localized test states, the boost law, the Casimir
// operators, and the Moyal star product of polynomials.

#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "operator.hpp"
#include "polynomial.hpp"

namespace ncqm {

enum class GeneratorKind { position1, position2, momentum1, momentum2, boost1, boost2, rotation, hamiltonian };

/// literal: x_i = x_i - (i/2) theta_ij d_j exactly as written, which gives
/// [x1, x2] = -i theta. flipped: theta enters with the opposite sign, giving +i theta.
enum class ThetaConvention { literal, flipped };

inline const char* to_string(ThetaConvention c) { return c == ThetaConvention::literal ? "literal" : "flipped"; }

struct BoostContext {
  double t = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// All generators built once for a given grid and parameter set.
class Generators {
 public:
  Generators(const Grid2D& grid, const PhysParams& phys, ThetaTensor theta, BoostContext ctx = {},
             ThetaConvention conv = ThetaConvention::literal)
      : grid_(grid), phys_(phys), ctx_(ctx), conv_(conv), x1_(grid), x2_(grid), p1_(grid), p2_(grid), k1_(grid),
        k2_(grid), l_(grid), h_(grid) {
    require(grid.boundary() == Boundary::periodic, ErrorKind::unsupported_boundary,
            "generators are built on periodic grids");
    phys.validate();
    require(std::isfinite(ctx.t) && std::isfinite(ctx.vx) && std::isfinite(ctx.vy), ErrorKind::invalid_argument,
            "boost context must be finite");
    theta_ = conv == ThetaConvention::literal ? theta.value() : -theta.value();

    const AxisMatrices ax = axis_matrices(grid, Axis::x), ay = axis_matrices(grid, Axis::y);
    const OperatorMatrix X = OperatorMatrix::on_x(grid, Factor::from_real(ax.position, true));
    const OperatorMatrix Y = OperatorMatrix::on_y(grid, Factor::from_real(ay.position, true));
    const OperatorMatrix Dx = OperatorMatrix::on_x(grid, Factor::from_real(ax.d1, false));
    const OperatorMatrix Dy = OperatorMatrix::on_y(grid, Factor::from_real(ay.d1, false));
    const double m = phys.mass, hb = phys.hbar;

    // x_i = x_i - (i/2) theta_ij d_j with theta_12 = theta
    x1_ = X + (-0.5 * I * theta_) * Dy;
    x2_ = Y + (0.5 * I * theta_) * Dx;
    p1_ = (-I * hb) * Dx;
    p2_ = (-I * hb) * Dy;
    k1_ = m * x1_ - ctx.t * p1_;
    k2_ = m * x2_ - ctx.t * p2_;
    l_ = x1_ * p2_ - x2_ * p1_;
    h_ = (0.5 / m) * (p1_ * p1_ + p2_ * p2_);
    for (auto* op : {&x1_, &x2_, &p1_, &p2_, &k1_, &k2_, &l_, &h_}) op->mark_hermitian();
  }

  const OperatorMatrix& get(GeneratorKind k) const {
    switch (k) {
      case GeneratorKind::position1: return x1_;
      case GeneratorKind::position2: return x2_;
      case GeneratorKind::momentum1: return p1_;
      case GeneratorKind::momentum2: return p2_;
      case GeneratorKind::boost1: return k1_;
      case GeneratorKind::boost2: return k2_;
      case GeneratorKind::rotation: return l_;
      case GeneratorKind::hamiltonian: return h_;
    }
    return h_;
  }

  const OperatorMatrix& x(int i) const { return i == 0 ? x1_ : x2_; }
  const OperatorMatrix& p(int i) const { return i == 0 ? p1_ : p2_; }
  const OperatorMatrix& k(int i) const { return i == 0 ? k1_ : k2_; }
  const OperatorMatrix& rotation() const { return l_; }
  const OperatorMatrix& hamiltonian() const { return h_; }

  const Grid2D& grid() const { return grid_; }
  const PhysParams& phys() const { return phys_; }
  const BoostContext& context() const { return ctx_; }
  ThetaConvention convention() const { return conv_; }
  /// theta as it enters the operators (sign-flipped under the flipped convention)
  double effective_theta() const { return theta_; }
  /// sign s in [x1, x2] = s * i * theta (for the user-facing theta)
  int position_commutator_sign() const { return conv_ == ThetaConvention::literal ? -1 : 1; }

 private:
  Grid2D grid_;
  PhysParams phys_;
  BoostContext ctx_;
  ThetaConvention conv_;
  double theta_ = 0.0;
  OperatorMatrix x1_, x2_, p1_, p2_, k1_, k2_, l_, h_;
};

inline OperatorMatrix build_generator(GeneratorKind kind, const Grid2D& grid, const PhysParams& phys,
                                      ThetaTensor theta, BoostContext ctx = {},
                                      ThetaConvention conv = ThetaConvention::literal) {
  return Generators(grid, phys, theta, ctx, conv).get(kind);
}

/// Randomized Gaussian-times-polynomial states centred within lx/4 of the
/// origin, widths 0.09..0.12 of the half-width, unit norm.
inline std::vector<WaveFunction> random_test_states(const Grid2D& grid, int count, std::uint64_t seed) {
  require(count > 0, ErrorKind::invalid_argument, "need at least one test state");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.09, 0.12);
  const double l = std::min(grid.lx(), grid.ly());
  std::vector<WaveFunction> out;
  for (int s = 0; s < count; ++s) {
    const double x0 = 0.25 * grid.lx() * u(rng), y0 = 0.25 * grid.ly() * u(rng);
    const double sigma = l * w(rng);
    const double kx = u(rng), ky = u(rng);
    cd c[4];
    for (auto& ci : c) ci = cd(u(rng), u(rng));
    c[0] += 1.5;
    auto f = [&](double x, double y) {
      const double dx = (x - x0) / sigma, dy = (y - y0) / sigma;
      const cd poly = c[0] + c[1] * dx + c[2] * dy + c[3] * dx * dy;
      return poly * std::exp(-0.5 * (dx * dx + dy * dy)) * std::exp(I * (kx * x + ky * y));
    };
    out.push_back(WaveFunction::sample(grid, f).normalized());
  }
  return out;
}

struct CommutatorResult {
  OperatorMatrix op;                 // AB - BA
  std::vector<WaveFunction> action;  // A(B psi) - B(A psi) per test state
};

inline CommutatorResult commutator(const OperatorMatrix& a, const OperatorMatrix& b,
                                   const std::vector<WaveFunction>& testset) {
  require(a.dim() == b.dim() && a.grid() == b.grid(), ErrorKind::shape, "commutator of mismatched operators");
  CommutatorResult r{commutator_operator(a, b), {}};
  for (const auto& psi : testset) r.action.push_back(a(b(psi)) - b(a(psi)));
  return r;
}

/// max over states of ||[A,B]psi - E psi|| / ||psi||, with E given as an operator.
inline double relative_residual(const OperatorMatrix& a, const OperatorMatrix& b, const OperatorMatrix& expected,
                                const std::vector<WaveFunction>& states) {
  double worst = 0.0;
  for (const auto& psi : states) {
    const WaveFunction r = a(b(psi)) - b(a(psi)) - expected(psi);
    worst = std::max(worst, r.norm() / psi.norm());
  }
  return worst;
}

struct RelationResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AlgebraReport {
  std::vector<RelationResult> relations;
  int boost_commutator_sign = -1;    // [K1,K2] = sign * i m^2 theta
  double boost_commutator_magnitude = 0.0;  // measured |<psi|[K1,K2]psi>| averaged over states

  bool all_pass() const {
    return std::all_of(relations.begin(), relations.end(), [](const RelationResult& r) { return r.pass; });
  }
  const RelationResult& at(const std::string& name) const {
    for (const auto& r : relations)
      if (r.name == name) return r;
    throw Error(ErrorKind::invalid_argument, "no relation named " + name);
  }
  void add(std::string name, double residual, double tol) {
    relations.push_back({std::move(name), residual, tol, residual <= tol});
  }
};

inline void to_json(nlohmann::json& j, const RelationResult& r) {
  j = {{"name", r.name}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

inline void to_json(nlohmann::json& j, const AlgebraReport& r) {
  j = {{"relations", r.relations},
       {"boost_commutator_sign", r.boost_commutator_sign},
       {"boost_commutator_magnitude", r.boost_commutator_magnitude},
       {"all_pass", r.all_pass()}};
}

/// Checks the exotic Galilei commutators plus [x_i, p_j] and [x1, x2] on the test set.
inline AlgebraReport check_exotic_algebra(const Generators& g, double tol, const std::vector<WaveFunction>& states) {
  require(tol > 0, ErrorKind::invalid_argument, "tolerance must be positive");
  require(!states.empty(), ErrorKind::invalid_argument, "empty test set");
  const Grid2D& grid = g.grid();
  const double m = g.phys().mass, hb = g.phys().hbar;
  const OperatorMatrix one = OperatorMatrix::identity(grid);
  const OperatorMatrix zero = OperatorMatrix::zero(grid);
  AlgebraReport rep;

  rep.add("[p_i,p_j]=0", relative_residual(g.p(0), g.p(1), zero, states), tol);

  double r = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      r = std::max(r, relative_residual(g.k(i), g.p(j), (i == j ? I * hb * m : cd(0.0)) * one, states));
  rep.add("[K_i,p_j]=i hbar m delta_ij", r, tol);

  r = std::max(relative_residual(g.rotation(), g.p(0), (I * hb) * g.p(1), states),
               relative_residual(g.rotation(), g.p(1), (-I * hb) * g.p(0), states));
  rep.add("[L,p_i]=i hbar eps_ij p_j", r, tol);

  // [K1, K2] = m^2 [x1, x2] = -i m^2 theta_eff
  const double theta_eff = g.effective_theta();
  rep.boost_commutator_sign = g.position_commutator_sign();
  rep.add("[K_1,K_2]=+-i m^2 theta", relative_residual(g.k(0), g.k(1), (-I * m * m * theta_eff) * one, states),
          tol);
  double mag = 0.0;
  for (const auto& psi : states) {
    const WaveFunction c = g.k(0)(g.k(1)(psi)) - g.k(1)(g.k(0)(psi));
    mag += std::abs(inner_product(psi, c)) / psi.norm_squared();
  }
  rep.boost_commutator_magnitude = mag / double(states.size());

  r = std::max(relative_residual(g.p(0), g.hamiltonian(), zero, states),
               relative_residual(g.p(1), g.hamiltonian(), zero, states));
  rep.add("[p_i,H]=0", r, tol);

  rep.add("[L,H]=0", relative_residual(g.rotation(), g.hamiltonian(), zero, states), tol);

  r = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      r = std::max(r, relative_residual(g.x(i), g.p(j), (i == j ? I * hb : cd(0.0)) * one, states));
  rep.add("[x_i,p_j]=i hbar delta_ij", r, tol);

  rep.add("[x_1,x_2]=+-i theta", relative_residual(g.x(0), g.x(1), (-I * theta_eff) * one, states), tol);
  return rep;
}

inline AlgebraReport check_exotic_algebra(const Grid2D& grid, const PhysParams& phys, ThetaTensor theta,
                                          BoostContext ctx, double tol, int n_states = 5, std::uint64_t seed = 1,
                                          ThetaConvention conv = ThetaConvention::literal) {
  require(n_states >= 5, ErrorKind::invalid_argument, "algebra check needs at least 5 test states");
  return check_exotic_algebra(Generators(grid, phys, theta, ctx, conv), tol,
                              random_test_states(grid, n_states, seed));
}

struct BoostCheck {
  double residual_p1 = 0.0;  // ||(-i/hbar)[v.K, p_1] psi - m v_1 psi|| / ||psi||, worst state
  double residual_p2 = 0.0;
  double max_residual() const { return std::max(residual_p1, residual_p2); }
};

/// Infinitesimal boost law: (-i/hbar)[v.K, p_j] = m v_j.
inline BoostCheck boost_derivative_check(const Generators& g, const std::vector<WaveFunction>& states) {
  const auto& c = g.context();
  const double m = g.phys().mass, hb = g.phys().hbar;
  const OperatorMatrix vk = c.vx * g.k(0) + c.vy * g.k(1);
  BoostCheck out;
  for (const auto& psi : states) {
    for (int j = 0; j < 2; ++j) {
      const double vj = j == 0 ? c.vx : c.vy;
      WaveFunction lhs = (-I / hb) * (vk(g.p(j)(psi)) - g.p(j)(vk(psi)));
      const double r = (lhs - (m * vj) * psi).norm() / psi.norm();
      (j == 0 ? out.residual_p1 : out.residual_p2) = std::max(j == 0 ? out.residual_p1 : out.residual_p2, r);
    }
  }
  return out;
}

struct CasimirResult {
  OperatorMatrix i1;
  OperatorMatrix i2;
  AlgebraReport report;
};

/// I1 = H - P^2/2m, I2 = L - (1/m) K x P with K x P = K1 p2 - K2 p1.
inline CasimirResult casimir_invariants(const Generators& g, double tol, const std::vector<WaveFunction>& states) {
  const double m = g.phys().mass;
  OperatorMatrix i1 = g.hamiltonian() - (0.5 / m) * (g.p(0) * g.p(0) + g.p(1) * g.p(1));
  OperatorMatrix i2 = g.rotation() - (1.0 / m) * (g.k(0) * g.p(1) - g.k(1) * g.p(0));
  const OperatorMatrix zero = OperatorMatrix::zero(g.grid());
  AlgebraReport rep;
  const std::pair<const char*, GeneratorKind> gens[] = {
      {"x1", GeneratorKind::position1}, {"x2", GeneratorKind::position2}, {"p1", GeneratorKind::momentum1},
      {"p2", GeneratorKind::momentum2}, {"K1", GeneratorKind::boost1},    {"K2", GeneratorKind::boost2},
      {"L", GeneratorKind::rotation},   {"H", GeneratorKind::hamiltonian}};
  for (const auto& [name, kind] : gens) {
    rep.add(std::string("[I1,") + name + "]=0", relative_residual(i1, g.get(kind), zero, states), tol);
    rep.add(std::string("[I2,") + name + "]=0", relative_residual(i2, g.get(kind), zero, states), tol);
  }
  return {std::move(i1), std::move(i2), std::move(rep)};
}

struct StarProduct {
  PolynomialPotential value;
  bool truncated = false;  // true when terms beyond max_order were dropped
};

/// Moyal product f * g = exp((i/2) theta^{mu nu} d_mu (x) d_nu) f g, summed to max_order.
/// For polynomials the series ends at min(deg f, deg g).
inline StarProduct moyal_star(const PolynomialPotential& f, const PolynomialPotential& g, ThetaTensor theta,
                              int max_order) {
  require(max_order >= 0, ErrorKind::invalid_argument, "max_order must be non-negative");
  StarProduct out;
  const int last = std::max(0, std::min(f.degree(), g.degree()));
  const double th = theta.value();
  double fact = 1.0;
  for (int n = 0; n <= last; ++n) {
    if (n > 0) fact *= n;
    PolynomialPotential term;
    double binom = 1.0;
    for (int k = 0; k <= n; ++k) {
      if (k > 0) binom = binom * (n - k + 1) / k;
      const PolynomialPotential df = f.derivative(Axis::x, k).derivative(Axis::y, n - k);
      const PolynomialPotential dg = g.derivative(Axis::y, k).derivative(Axis::x, n - k);
      term += ((n - k) % 2 == 0 ? binom : -binom) * (df * dg);
    }
    term *= std::pow(0.5 * I * th, n) / fact;
    if (n > max_order) {
      if (!term.empty()) out.truncated = true;
      continue;
    }
    out.value += term;
  }
  return out;
}

}  // namespace ncqm
