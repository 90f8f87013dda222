#pragma once

// Bopp shift of polynomial potentials and assembly of noncommutative
// Hamiltonians H = p^2/2m + V(x1 - (i/2) theta d_y, x2 + (i/2) theta d_x).

#include <array>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "operator.hpp"
#include "polynomial.hpp"

namespace ncqm {

/// Sum of c * x^ex y^ey d_x^dx d_y^dy, always kept with coordinates to the left.
class PseudoDiffOperator {
 public:
  struct Key {
    int ex = 0, ey = 0, dx = 0, dy = 0;
    auto operator<=>(const Key&) const = default;
  };

  PseudoDiffOperator() = default;

  static PseudoDiffOperator term(Key k, cd c = 1.0) {
    PseudoDiffOperator p;
    p.add(k, c);
    return p;
  }
  static PseudoDiffOperator from_potential(const PolynomialPotential& v) {
    PseudoDiffOperator p;
    for (const auto& [m, c] : v.coefficients()) p.add({m.first, m.second, 0, 0}, c);
    return p;
  }

  void add(Key k, cd c) {
    if (c == 0.0) return;
    auto& slot = terms_[k];
    slot += c;
    if (std::abs(slot) == 0.0) terms_.erase(k);
  }

  const std::map<Key, cd>& terms() const { return terms_; }
  cd coeff(Key k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? cd(0.0) : it->second;
  }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Highest derivative order appearing in any term.
  int derivative_order() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, k.dx + k.dy);
    return d;
  }

  PseudoDiffOperator& operator+=(const PseudoDiffOperator& o) {
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
  }
  PseudoDiffOperator& operator*=(cd s) {
    if (s == 0.0) terms_.clear();
    for (auto& [k, c] : terms_) c *= s;
    return *this;
  }
  friend PseudoDiffOperator operator+(PseudoDiffOperator a, const PseudoDiffOperator& b) { return a += b; }
  friend PseudoDiffOperator operator-(PseudoDiffOperator a, const PseudoDiffOperator& b) {
    return a += (-1.0) * b;
  }
  friend PseudoDiffOperator operator*(cd s, PseudoDiffOperator a) { return a *= s; }

  // d^c x^e = sum_k C(c,k) e!/(e-k)! x^(e-k) d^(c-k), independently per axis.
  friend PseudoDiffOperator operator*(const PseudoDiffOperator& a, const PseudoDiffOperator& b) {
    PseudoDiffOperator r;
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_)
        for (int i = 0; i <= std::min(ka.dx, kb.ex); ++i)
          for (int j = 0; j <= std::min(ka.dy, kb.ey); ++j) {
            const double w = reorder_weight(ka.dx, kb.ex, i) * reorder_weight(ka.dy, kb.ey, j);
            r.add({ka.ex + kb.ex - i, ka.ey + kb.ey - j, ka.dx - i + kb.dx, ka.dy - j + kb.dy}, ca * cb * w);
          }
    return r;
  }

  friend bool operator==(const PseudoDiffOperator& a, const PseudoDiffOperator& b) { return a.terms_ == b.terms_; }

  double max_abs_diff(const PseudoDiffOperator& o) const {
    double m = 0.0;
    for (const auto& [k, c] : (*this - o).terms_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  // C(c,k) * e!/(e-k)!
  static double reorder_weight(int c, int e, int k) {
    double w = 1.0;
    for (int q = 0; q < k; ++q) w *= double(c - q) / double(q + 1) * double(e - q);
    return w;
  }

  std::map<Key, cd> terms_;
};

inline void to_json(nlohmann::json& j, const PseudoDiffOperator& p) {
  j = nlohmann::json::array();
  for (const auto& [k, c] : p.terms())
    j.push_back({{"ex", k.ex}, {"ey", k.ey}, {"dx", k.dx}, {"dy", k.dy}, {"re", c.real()}, {"im", c.imag()}});
}

namespace detail {

// Sum over all words in a copies of u and b copies of v (unnormalized).
template <class T>
class WordSums {
 public:
  WordSums(T u, T v, T one) : u_(std::move(u)), v_(std::move(v)), one_(std::move(one)) {}

  const T& get(int a, int b) {
    const auto key = std::make_pair(a, b);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    T s = one_;
    if (a == 0 && b == 0) {
    } else if (b == 0) {
      s = u_ * get(a - 1, 0);
    } else if (a == 0) {
      s = v_ * get(0, b - 1);
    } else {
      s = u_ * get(a - 1, b);
      s = s + v_ * get(a, b - 1);
    }
    return memo_.emplace(key, std::move(s)).first->second;
  }

 private:
  T u_, v_, one_;
  std::map<std::pair<int, int>, T> memo_;
};

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int q = 1; q <= k; ++q) r = r * (n - k + q) / q;
  return r;
}

}  // namespace detail

/// V(x1 - (i/2) theta d_y, x2 + (i/2) theta d_x) with each monomial x1^a x2^b
/// Weyl-ordered (averaged over all orderings of the noncommuting pair).
inline PseudoDiffOperator bopp_shift(const PolynomialPotential& v, ThetaTensor theta) {
  const double th = theta.value();
  using K = PseudoDiffOperator::Key;
  const PseudoDiffOperator x1 = PseudoDiffOperator::term(K{1, 0, 0, 0}) +
                                PseudoDiffOperator::term(K{0, 0, 0, 1}, -0.5 * I * th);
  const PseudoDiffOperator x2 = PseudoDiffOperator::term(K{0, 1, 0, 0}) +
                                PseudoDiffOperator::term(K{0, 0, 1, 0}, 0.5 * I * th);
  detail::WordSums<PseudoDiffOperator> words(x1, x2, PseudoDiffOperator::term(K{}));
  PseudoDiffOperator out;
  for (const auto& [m, c] : v.coefficients())
    out += (c / detail::binomial(m.first + m.second, m.first)) * words.get(m.first, m.second);
  return out;
}

/// Discretizes each normal-ordered term as (Y^ey D_y^dy) (x) (X^ex D_x^dx).
/// Not hermitian in general on a finite grid; used for cross-checks.
inline OperatorMatrix discretize(const PseudoDiffOperator& p, const Grid2D& grid) {
  const AxisMatrices ax = axis_matrices(grid, Axis::x), ay = axis_matrices(grid, Axis::y);
  auto power = [](const MatrixXd& m, int e) {
    MatrixXd r = MatrixXd::Identity(m.rows(), m.cols());
    for (int q = 0; q < e; ++q) r = r * m;
    return r;
  };
  OperatorMatrix out(grid);
  for (const auto& [k, c] : p.terms()) {
    const MatrixXd fx = power(ax.position, k.ex) * power(ax.d1, k.dx);
    const MatrixXd fy = power(ay.position, k.ey) * power(ay.d1, k.dy);
    out += OperatorMatrix::kron(grid, Factor::dense(fy.cast<cd>()), Factor::dense(fx.cast<cd>()), c);
  }
  return out;
}

/// The discrete noncommutative coordinates x1, x2 on any grid.
inline std::pair<OperatorMatrix, OperatorMatrix> nc_coordinates(const Grid2D& grid, ThetaTensor theta) {
  const AxisMatrices ax = axis_matrices(grid, Axis::x), ay = axis_matrices(grid, Axis::y);
  const double th = theta.value();
  OperatorMatrix x1 = OperatorMatrix::on_x(grid, Factor::from_real(ax.position, ax.position_diagonal)) +
                      OperatorMatrix::on_y(grid, Factor::from_real(ay.d1, false), -0.5 * I * th);
  OperatorMatrix x2 = OperatorMatrix::on_y(grid, Factor::from_real(ay.position, ay.position_diagonal)) +
                      OperatorMatrix::on_x(grid, Factor::from_real(ax.d1, false), 0.5 * I * th);
  return {std::move(x1), std::move(x2)};
}

/// -(hbar^2/2m)(d_x^2 + d_y^2)
inline OperatorMatrix kinetic_operator(const Grid2D& grid, const PhysParams& phys) {
  phys.validate();
  const AxisMatrices ax = axis_matrices(grid, Axis::x), ay = axis_matrices(grid, Axis::y);
  const double c = -0.5 * phys.hbar * phys.hbar / phys.mass;
  return OperatorMatrix::on_x(grid, Factor::from_real(ax.d2, false), c) +
         OperatorMatrix::on_y(grid, Factor::from_real(ay.d2, false), c);
}

/// V evaluated on the discrete noncommutative coordinates, Weyl-ordered.
/// Each word's adjoint is its reverse, so a real V gives a hermitian matrix.
inline OperatorMatrix discrete_potential(const PolynomialPotential& v, const Grid2D& grid, ThetaTensor theta) {
  auto [x1, x2] = nc_coordinates(grid, theta);
  detail::WordSums<OperatorMatrix> words(x1, x2, OperatorMatrix::identity(grid));
  OperatorMatrix out(grid);
  for (const auto& [m, c] : v.coefficients())
    out += (c / detail::binomial(m.first + m.second, m.first)) * words.get(m.first, m.second);
  return out;
}

inline OperatorMatrix build_nc_hamiltonian(const PolynomialPotential& v, const Grid2D& grid, const PhysParams& phys,
                                           ThetaTensor theta) {
  require(v.is_real(), ErrorKind::invalid_argument, "hamiltonian needs a real-coefficient potential");
  OperatorMatrix h = kinetic_operator(grid, phys) + discrete_potential(v, grid, theta);
  h.mark_hermitian();
  return h;
}

/// H = -(1/2) lap + alpha x + beta y + (theta/2)(alpha p_y - beta p_x), Dirichlet walls only.
inline OperatorMatrix build_linear_hamiltonian(double alpha, double beta, const Grid2D& grid, const PhysParams& phys,
                                               ThetaTensor theta) {
  require(grid.boundary() == Boundary::dirichlet, ErrorKind::unsupported_boundary,
          "linear potential needs a Dirichlet grid");
  require(std::isfinite(alpha) && std::isfinite(beta) && (alpha != 0.0 || beta != 0.0),
          ErrorKind::invalid_argument, "linear potential needs (alpha, beta) != (0, 0)");
  return build_nc_hamiltonian(PolynomialPotential::linear(alpha, beta), grid, phys, theta);
}

/// Harmonic (omega) plus alpha_c (x^3 + y^3) + gamma (x^4 + y^4).
inline OperatorMatrix build_anharmonic_hamiltonian(double omega, double alpha_c, double gamma, const Grid2D& grid,
                                                   const PhysParams& phys, ThetaTensor theta) {
  require(std::isfinite(omega) && omega > 0, ErrorKind::invalid_argument, "omega must be positive");
  require(std::isfinite(gamma) && gamma >= 0, ErrorKind::invalid_argument,
          "gamma < 0 makes the spectrum unbounded below");
  require(std::isfinite(alpha_c), ErrorKind::invalid_argument, "alpha_c must be finite");
  return build_nc_hamiltonian(PolynomialPotential::harmonic(omega, omega) + PolynomialPotential::anharmonic(alpha_c, gamma),
                              grid, phys, theta);
}

}  // namespace ncqm
