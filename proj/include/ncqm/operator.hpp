#pragma once

// Discrete linear operators on a Grid2D.
//
// Every operator the library builds is a polynomial in x, y, d/dx and d/dy,
// so it is stored exactly as a short sum of Kronecker products
//     A = sum_t c_t (Y_t (x) X_t)
// with Y_t acting on the y index and X_t on the x index. Sums, products and
// adjoints stay in this form; dense assembly is available on demand.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"

namespace ncqm {

/// A linear map along one axis: identity, diagonal, or dense.
class Factor {
 public:
  enum class Kind { identity, diagonal, dense };

  static Factor identity(int n) { return Factor(Kind::identity, n); }
  static Factor diagonal(VectorXcd d) {
    Factor f(Kind::diagonal, int(d.size()));
    f.diag_ = std::move(d);
    return f;
  }
  static Factor dense(MatrixXcd m) {
    require(m.rows() == m.cols(), ErrorKind::shape, "factor must be square");
    Factor f(Kind::dense, int(m.rows()));
    f.mat_ = std::move(m);
    return f;
  }
  static Factor from_real(const MatrixXd& m, bool is_diagonal) {
    if (is_diagonal) return diagonal(m.diagonal().cast<cd>());
    return dense(m.cast<cd>());
  }

  Kind kind() const { return kind_; }
  int size() const { return n_; }
  bool is_identity() const { return kind_ == Kind::identity; }
  const VectorXcd& diag() const { return diag_; }
  const MatrixXcd& mat() const { return mat_; }

  MatrixXcd to_dense() const {
    switch (kind_) {
      case Kind::identity: return MatrixXcd::Identity(n_, n_);
      case Kind::diagonal: return diag_.asDiagonal();
      case Kind::dense: return mat_;
    }
    return {};
  }

  cd entry(int r, int c) const {
    switch (kind_) {
      case Kind::identity: return r == c ? 1.0 : 0.0;
      case Kind::diagonal: return r == c ? diag_[r] : 0.0;
      case Kind::dense: return mat_(r, c);
    }
    return 0.0;
  }

  double max_abs() const {
    switch (kind_) {
      case Kind::identity: return 1.0;
      case Kind::diagonal: return diag_.cwiseAbs().maxCoeff();
      case Kind::dense: return mat_.cwiseAbs().maxCoeff();
    }
    return 0.0;
  }

  bool is_zero() const {
    if (kind_ == Kind::identity) return false;
    return max_abs() == 0.0;
  }

  Factor adjoint() const {
    switch (kind_) {
      case Kind::identity: return *this;
      case Kind::diagonal: return diagonal(diag_.conjugate());
      case Kind::dense: return dense(mat_.adjoint());
    }
    return *this;
  }

  friend Factor operator*(const Factor& a, const Factor& b) {
    require(a.n_ == b.n_, ErrorKind::shape, "factor size mismatch");
    if (a.is_identity()) return b;
    if (b.is_identity()) return a;
    if (a.kind_ == Kind::diagonal && b.kind_ == Kind::diagonal) return diagonal(a.diag_.cwiseProduct(b.diag_));
    if (a.kind_ == Kind::diagonal) return dense(a.diag_.asDiagonal() * b.mat_);
    if (b.kind_ == Kind::diagonal) return dense(a.mat_ * b.diag_.asDiagonal());
    return dense(a.mat_ * b.mat_);
  }

  // ca*a + cb*b
  static Factor combine(cd ca, const Factor& a, cd cb, const Factor& b) {
    require(a.n_ == b.n_, ErrorKind::shape, "factor size mismatch");
    if (a.kind_ != Kind::dense && b.kind_ != Kind::dense) {
      VectorXcd da = a.is_identity() ? VectorXcd::Ones(a.n_) : a.diag_;
      VectorXcd db = b.is_identity() ? VectorXcd::Ones(b.n_) : b.diag_;
      return diagonal(ca * da + cb * db);
    }
    return dense(ca * a.to_dense() + cb * b.to_dense());
  }

  friend bool operator==(const Factor& a, const Factor& b) {
    if (a.kind_ != b.kind_ || a.n_ != b.n_) return false;
    switch (a.kind_) {
      case Kind::identity: return true;
      case Kind::diagonal: return a.diag_ == b.diag_;
      case Kind::dense: return a.mat_ == b.mat_;
    }
    return false;
  }

  // Applies the factor along the rows of the nx-by-ny column-major view.
  void apply_left(MatrixXcd& m) const {
    if (kind_ == Kind::diagonal) m = diag_.asDiagonal() * m;
    else if (kind_ == Kind::dense) m = mat_ * m;
  }
  // Right-multiplies by the transpose (acts along columns).
  void apply_right_transposed(MatrixXcd& m) const {
    if (kind_ == Kind::diagonal) m = m * diag_.asDiagonal();
    else if (kind_ == Kind::dense) m = m * mat_.transpose();
  }

 private:
  Factor(Kind k, int n) : kind_(k), n_(n) {}

  Kind kind_ = Kind::identity;
  int n_ = 0;
  VectorXcd diag_;
  MatrixXcd mat_;
};

struct KronTerm {
  cd coeff;
  Factor y;
  Factor x;
};

class OperatorMatrix {
 public:
  explicit OperatorMatrix(const Grid2D& grid) : grid_(grid) {}

  static OperatorMatrix zero(const Grid2D& g) { return OperatorMatrix(g); }
  static OperatorMatrix identity(const Grid2D& g) {
    OperatorMatrix m(g);
    m.terms_.push_back({1.0, Factor::identity(g.ny()), Factor::identity(g.nx())});
    return m;
  }
  static OperatorMatrix on_x(const Grid2D& g, Factor fx, cd c = 1.0) {
    OperatorMatrix m(g);
    m.terms_.push_back({c, Factor::identity(g.ny()), std::move(fx)});
    return m;
  }
  static OperatorMatrix on_y(const Grid2D& g, Factor fy, cd c = 1.0) {
    OperatorMatrix m(g);
    m.terms_.push_back({c, std::move(fy), Factor::identity(g.nx())});
    return m;
  }
  static OperatorMatrix kron(const Grid2D& g, Factor fy, Factor fx, cd c = 1.0) {
    require(fy.size() == g.ny() && fx.size() == g.nx(), ErrorKind::shape, "factor does not fit grid");
    OperatorMatrix m(g);
    m.terms_.push_back({c, std::move(fy), std::move(fx)});
    return m;
  }

  const Grid2D& grid() const { return grid_; }
  int dim() const { return grid_.size(); }
  const std::vector<KronTerm>& terms() const { return terms_; }
  bool hermitian() const { return hermitian_; }

  VectorXcd apply(const VectorXcd& v) const {
    require(v.size() == dim(), ErrorKind::shape, "operator/vector dimension mismatch");
    VectorXcd out = VectorXcd::Zero(dim());
    Eigen::Map<const MatrixXcd> in(v.data(), grid_.nx(), grid_.ny());
    Eigen::Map<MatrixXcd> acc(out.data(), grid_.nx(), grid_.ny());
    MatrixXcd work;
    for (const auto& t : terms_) {
      work = in;
      t.x.apply_left(work);
      t.y.apply_right_transposed(work);
      acc += t.coeff * work;
    }
    return out;
  }

  WaveFunction apply(const WaveFunction& psi) const {
    require(psi.grid() == grid_, ErrorKind::shape, "operator and wave function live on different grids");
    return WaveFunction(grid_, apply(psi.amplitudes()));
  }
  WaveFunction operator()(const WaveFunction& psi) const { return apply(psi); }

  OperatorMatrix adjoint() const {
    OperatorMatrix r(grid_);
    for (const auto& t : terms_) r.terms_.push_back({std::conj(t.coeff), t.y.adjoint(), t.x.adjoint()});
    r.hermitian_ = hermitian_;
    return r;
  }

  OperatorMatrix& operator+=(const OperatorMatrix& o) {
    check_same(o);
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    hermitian_ = false;
    simplify();
    return *this;
  }
  OperatorMatrix& operator-=(const OperatorMatrix& o) { return *this += (-1.0) * o; }
  OperatorMatrix& operator*=(cd s) {
    for (auto& t : terms_) t.coeff *= s;
    hermitian_ = false;
    if (s == 0.0) terms_.clear();
    return *this;
  }

  friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
  friend OperatorMatrix operator-(OperatorMatrix a, const OperatorMatrix& b) { return a -= b; }
  friend OperatorMatrix operator*(cd s, OperatorMatrix a) { return a *= s; }
  friend OperatorMatrix operator*(double s, OperatorMatrix a) { return a *= cd(s); }
  friend OperatorMatrix operator-(OperatorMatrix a) { return a *= cd(-1.0); }

  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
    a.check_same(b);
    OperatorMatrix r(a.grid_);
    for (const auto& s : a.terms_)
      for (const auto& t : b.terms_) r.terms_.push_back({s.coeff * t.coeff, s.y * t.y, s.x * t.x});
    r.simplify();
    return r;
  }

  /// Entry (row, col) in the row-major flattening.
  cd entry(int row, int col) const {
    const int nx = grid_.nx();
    cd s = 0.0;
    for (const auto& t : terms_) s += t.coeff * t.y.entry(row / nx, col / nx) * t.x.entry(row % nx, col % nx);
    return s;
  }

  MatrixXcd to_dense() const {
    const int n = dim(), nx = grid_.nx(), ny = grid_.ny();
    MatrixXcd m = MatrixXcd::Zero(n, n);
    for (const auto& t : terms_) {
      const MatrixXcd fx = t.x.to_dense();
      const MatrixXcd fy = t.y.to_dense();
      for (int cy = 0; cy < ny; ++cy)
        for (int ry = 0; ry < ny; ++ry) {
          const cd w = t.coeff * fy(ry, cy);
          if (w == 0.0) continue;
          m.block(ry * nx, cy * nx, nx, nx) += w * fx;
        }
    }
    return m;
  }

  /// True when every term acts on a single axis (A = I(x)Bx + By(x)I).
  bool is_kronecker_sum() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const KronTerm& t) { return t.x.is_identity() || t.y.is_identity(); });
  }

  /// Splits a Kronecker sum into its x and y parts (constants go to x).
  std::pair<MatrixXcd, MatrixXcd> kronecker_sum_parts() const {
    require(is_kronecker_sum(), ErrorKind::invalid_argument, "operator is not a Kronecker sum");
    MatrixXcd ax = MatrixXcd::Zero(grid_.nx(), grid_.nx());
    MatrixXcd ay = MatrixXcd::Zero(grid_.ny(), grid_.ny());
    for (const auto& t : terms_) {
      if (t.y.is_identity()) ax += t.coeff * t.x.to_dense();
      else ay += t.coeff * t.y.to_dense();
    }
    return {ax, ay};
  }

  struct HermiticityDefect {
    double defect;   // max |A - A^dagger|
    double max_abs;  // max |A|
  };

  HermiticityDefect hermiticity_defect() const {
    const int nx = grid_.nx(), ny = grid_.ny();
    if (is_kronecker_sum()) {
      auto [ax, ay] = kronecker_sum_parts();
      const MatrixXcd dx = ax - ax.adjoint(), dy = ay - ay.adjoint();
      double defect = 0.0, mx = 0.0;
      auto offdiag_max = [](const MatrixXcd& m) {
        double v = 0.0;
        for (int c = 0; c < m.cols(); ++c)
          for (int r = 0; r < m.rows(); ++r)
            if (r != c) v = std::max(v, std::abs(m(r, c)));
        return v;
      };
      defect = std::max(offdiag_max(dx), offdiag_max(dy));
      mx = std::max(offdiag_max(ax), offdiag_max(ay));
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          defect = std::max(defect, std::abs(dx(i, i) + dy(j, j)));
          mx = std::max(mx, std::abs(ax(i, i) + ay(j, j)));
        }
      return {defect, mx};
    }
    std::vector<MatrixXcd> fx, fy;
    for (const auto& t : terms_) {
      fx.push_back(t.x.to_dense());
      fy.push_back(t.y.to_dense());
    }
    double defect = 0.0, mx = 0.0;
    MatrixXcd b1(nx, nx), b2(nx, nx);
    for (int ry = 0; ry < ny; ++ry)
      for (int cy = ry; cy < ny; ++cy) {
        b1.setZero();
        b2.setZero();
        for (size_t t = 0; t < terms_.size(); ++t) {
          const cd w1 = terms_[t].coeff * fy[t](ry, cy);
          const cd w2 = terms_[t].coeff * fy[t](cy, ry);
          if (w1 != 0.0) b1 += w1 * fx[t];
          if (w2 != 0.0) b2 += w2 * fx[t];
        }
        defect = std::max(defect, (b1 - b2.adjoint()).cwiseAbs().maxCoeff());
        mx = std::max({mx, b1.cwiseAbs().maxCoeff(), b2.cwiseAbs().maxCoeff()});
      }
    return {defect, mx};
  }

  /// Verifies max|A - A^dagger| <= tol * max|A| and sets the hermitian flag.
  OperatorMatrix& mark_hermitian(double rel_tol = 1e-12) {
    const auto h = hermiticity_defect();
    require(h.defect <= rel_tol * std::max(h.max_abs, 1e-300), ErrorKind::hermiticity,
            "operator is not hermitian (defect " + std::to_string(h.defect) + ", scale " +
                std::to_string(h.max_abs) + ")");
    hermitian_ = true;
    return *this;
  }

  /// Merges terms sharing a factor and drops exact zeros.
  void simplify() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < terms_.size() && !changed; ++i)
        for (size_t j = i + 1; j < terms_.size() && !changed; ++j) {
          KronTerm& a = terms_[i];
          const KronTerm& b = terms_[j];
          if (a.y == b.y) {
            a.x = Factor::combine(a.coeff, a.x, b.coeff, b.x);
            a.coeff = 1.0;
            changed = true;
          } else if (a.x == b.x) {
            a.y = Factor::combine(a.coeff, a.y, b.coeff, b.y);
            a.coeff = 1.0;
            changed = true;
          }
          if (changed) terms_.erase(terms_.begin() + long(j));
        }
    }
    std::erase_if(terms_, [](const KronTerm& t) { return t.coeff == 0.0 || t.x.is_zero() || t.y.is_zero(); });
  }

 private:
  void check_same(const OperatorMatrix& o) const {
    require(grid_ == o.grid_, ErrorKind::shape, "operators live on different grids");
  }

  Grid2D grid_;
  std::vector<KronTerm> terms_;
  bool hermitian_ = false;
};

/// AB - BA
inline OperatorMatrix commutator_operator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a * b - b * a;
}

}  // namespace ncqm
