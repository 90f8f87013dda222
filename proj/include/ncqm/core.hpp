#pragma once

// Domain types shared by every module: sampling grids, the noncommutativity
// tensor, physical constants, wave functions and the 1D discrete operators
// (position, derivative) the 2D operators are assembled from.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace ncqm {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cd I{0.0, 1.0};

enum class ErrorKind {
  invalid_argument,
  shape,
  unsupported_boundary,
  hermiticity,
  convergence,
  io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::shape: return "shape";
    case ErrorKind::unsupported_boundary: return "unsupported-boundary";
    case ErrorKind::hermiticity: return "hermiticity";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

enum class Boundary { periodic, dirichlet };

inline const char* to_string(Boundary b) {
  return b == Boundary::periodic ? "periodic" : "dirichlet";
}

enum class Axis { x, y };

/// Uniform sampling of [-lx,lx] x [-ly,ly].
///
/// Periodic grids sample x_j = -lx + j*hx (j = 0..nx-1); Dirichlet grids use
/// cell centres x_j = -lx + (j + 1/2)*hx so that the walls sit at +-lx.
/// Flattening is row-major: index = iy*nx + ix.
class Grid2D {
 public:
  Grid2D(int nx, int ny, double lx, double ly, Boundary boundary = Boundary::periodic)
      : nx_(nx), ny_(ny), lx_(lx), ly_(ly), boundary_(boundary) {
    require(nx >= 16 && ny >= 16, ErrorKind::invalid_argument, "grid needs nx, ny >= 16");
    require(nx % 2 == 0 && ny % 2 == 0, ErrorKind::invalid_argument, "grid point counts must be even");
    require(std::isfinite(lx) && std::isfinite(ly) && lx > 0 && ly > 0, ErrorKind::invalid_argument,
            "grid half-widths must be positive");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  Boundary boundary() const { return boundary_; }
  int size() const { return nx_ * ny_; }
  double hx() const { return 2.0 * lx_ / nx_; }
  double hy() const { return 2.0 * ly_ / ny_; }
  double cell() const { return hx() * hy(); }
  int index(int ix, int iy) const { return iy * nx_ + ix; }

  double x(int ix) const { return coord(ix, lx_, hx()); }
  double y(int iy) const { return coord(iy, ly_, hy()); }

  VectorXd xs() const { return axis_points(Axis::x); }
  VectorXd ys() const { return axis_points(Axis::y); }

  VectorXd axis_points(Axis a) const {
    const int n = a == Axis::x ? nx_ : ny_;
    VectorXd p(n);
    for (int j = 0; j < n; ++j) p[j] = a == Axis::x ? x(j) : y(j);
    return p;
  }

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.lx_ == b.lx_ && a.ly_ == b.ly_ &&
           a.boundary_ == b.boundary_;
  }

 private:
  double coord(int j, double l, double h) const {
    return boundary_ == Boundary::periodic ? -l + j * h : -l + (j + 0.5) * h;
  }

  int nx_, ny_;
  double lx_, ly_;
  Boundary boundary_;
};

/// Antisymmetric theta_ij = theta * eps_ij with eps_12 = +1.
class ThetaTensor {
 public:
  constexpr ThetaTensor() = default;
  explicit ThetaTensor(double theta) : theta_(theta) {
    require(std::isfinite(theta), ErrorKind::invalid_argument, "theta must be finite");
  }
  double value() const { return theta_; }
  // i, j in {0, 1}
  double operator()(int i, int j) const {
    if (i == j) return 0.0;
    return i == 0 ? theta_ : -theta_;
  }
  ThetaTensor flipped() const { return ThetaTensor(-theta_); }

 private:
  double theta_ = 0.0;
};

struct PhysParams {
  double mass = 1.0;
  double hbar = 1.0;

  void validate() const {
    require(std::isfinite(mass) && mass > 0, ErrorKind::invalid_argument, "mass must be positive");
    require(std::isfinite(hbar) && hbar > 0, ErrorKind::invalid_argument, "hbar must be positive");
  }
};

/// Complex amplitudes psi(x_ix, y_iy) on a grid.
class WaveFunction {
 public:
  explicit WaveFunction(const Grid2D& grid) : grid_(grid), amp_(VectorXcd::Zero(grid.size())) {}

  WaveFunction(const Grid2D& grid, VectorXcd amplitudes) : grid_(grid), amp_(std::move(amplitudes)) {
    require(amp_.size() == grid_.size(), ErrorKind::shape, "amplitude count does not match grid");
    require(amp_.allFinite(), ErrorKind::invalid_argument, "wave function has non-finite entries");
  }

  template <class F>
  static WaveFunction sample(const Grid2D& grid, F&& f) {
    VectorXcd a(grid.size());
    for (int iy = 0; iy < grid.ny(); ++iy)
      for (int ix = 0; ix < grid.nx(); ++ix) a[grid.index(ix, iy)] = cd(f(grid.x(ix), grid.y(iy)));
    return WaveFunction(grid, std::move(a));
  }

  const Grid2D& grid() const { return grid_; }
  const VectorXcd& amplitudes() const { return amp_; }
  VectorXcd& amplitudes() { return amp_; }
  cd operator()(int ix, int iy) const { return amp_[grid_.index(ix, iy)]; }

  double norm_squared() const { return amp_.squaredNorm() * grid_.cell(); }
  double norm() const { return std::sqrt(norm_squared()); }

  WaveFunction normalized() const {
    const double n = norm();
    require(n > 0, ErrorKind::invalid_argument, "cannot normalize a zero wave function");
    return WaveFunction(grid_, amp_ / n);
  }

  WaveFunction& operator+=(const WaveFunction& o) {
    require(grid_ == o.grid_, ErrorKind::shape, "grid mismatch");
    amp_ += o.amp_;
    return *this;
  }
  WaveFunction& operator-=(const WaveFunction& o) {
    require(grid_ == o.grid_, ErrorKind::shape, "grid mismatch");
    amp_ -= o.amp_;
    return *this;
  }
  WaveFunction& operator*=(cd s) {
    amp_ *= s;
    return *this;
  }
  friend WaveFunction operator+(WaveFunction a, const WaveFunction& b) { return a += b; }
  friend WaveFunction operator-(WaveFunction a, const WaveFunction& b) { return a -= b; }
  friend WaveFunction operator*(cd s, WaveFunction a) { return a *= s; }

 private:
  Grid2D grid_;
  VectorXcd amp_;
};

/// <phi|psi> = sum conj(phi) psi hx hy
inline cd inner_product(const WaveFunction& phi, const WaveFunction& psi) {
  require(phi.grid() == psi.grid(), ErrorKind::shape, "inner product of wave functions on different grids");
  return phi.amplitudes().dot(psi.amplitudes()) * phi.grid().cell();
}

namespace detail {

inline double wavenumber(int j, int n, double l) {
  const int m = j <= n / 2 ? j : j - n;
  return pi * m / l;
}

// Applies f(k) mode-by-mode along one axis of a row-major nx*ny field.
template <class F>
VectorXcd fourier_multiply(const Grid2D& g, const VectorXcd& v, Axis axis, F&& symbol) {
  const int n = axis == Axis::x ? g.nx() : g.ny();
  const int lines = axis == Axis::x ? g.ny() : g.nx();
  const double l = axis == Axis::x ? g.lx() : g.ly();
  VectorXcd mult(n);
  for (int j = 0; j < n; ++j) mult[j] = symbol(j, wavenumber(j, n, l));

  Eigen::FFT<double> fft;
  std::vector<cd> line(n), spec(n);
  VectorXcd out(v.size());
  for (int q = 0; q < lines; ++q) {
    for (int j = 0; j < n; ++j) line[j] = axis == Axis::x ? v[q * g.nx() + j] : v[j * g.nx() + q];
    fft.fwd(spec, line);
    for (int j = 0; j < n; ++j) spec[j] *= mult[j];
    fft.inv(line, spec);
    for (int j = 0; j < n; ++j) (axis == Axis::x ? out[q * g.nx() + j] : out[j * g.nx() + q]) = line[j];
  }
  return out;
}

}  // namespace detail

/// Fourier-collocation derivative d^order/d(axis)^order on a periodic grid.
/// Odd orders drop the Nyquist mode; even orders keep it.
inline WaveFunction spectral_derivative(const WaveFunction& psi, Axis axis, int order) {
  const Grid2D& g = psi.grid();
  require(g.boundary() == Boundary::periodic, ErrorKind::unsupported_boundary,
          "spectral_derivative needs a periodic grid");
  require(order == 1 || order == 2 || order == 4, ErrorKind::invalid_argument,
          "derivative order must be 1, 2 or 4");
  const int n = axis == Axis::x ? g.nx() : g.ny();
  auto symbol = [&](int j, double k) -> cd {
    if (order % 2 == 1 && j == n / 2) return 0.0;
    return std::pow(I * k, order);
  };
  return WaveFunction(g, detail::fourier_multiply(g, psi.amplitudes(), axis, symbol));
}

/// Norm after a forward+inverse transform pair along both axes.
inline double roundtrip_norm(const WaveFunction& psi) {
  auto id = [](int, double) -> cd { return 1.0; };
  const Grid2D& g = psi.grid();
  VectorXcd v = detail::fourier_multiply(g, psi.amplitudes(), Axis::x, id);
  v = detail::fourier_multiply(g, v, Axis::y, id);
  return std::sqrt(v.squaredNorm() * g.cell());
}

/// 1D discrete operators along one axis. For periodic axes these are the
/// Fourier collocation matrices; for Dirichlet axes they are Galerkin matrices
/// in the sine basis, expressed in the orthonormal nodal (DST-II) frame.
struct AxisMatrices {
  MatrixXd position;  // x
  MatrixXd d1;        // d/dx, exactly antisymmetric
  MatrixXd d2;        // d^2/dx^2, exactly symmetric
  bool position_diagonal = true;
};

namespace detail {

inline AxisMatrices periodic_axis(int n, double l) {
  AxisMatrices m;
  const double h = 2.0 * l / n;
  const double scale = pi / l;  // maps [-l,l) onto [0, 2pi)
  const double hs = 2.0 * pi / n;
  m.position = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) m.position(j, j) = -l + j * h;

  VectorXd c1(n), c2(n);
  c1[0] = 0.0;
  c2[0] = -(pi * pi) / (3.0 * hs * hs) - 1.0 / 6.0;
  for (int d = 1; d <= n / 2; ++d) {
    const double sgn = d % 2 == 0 ? 1.0 : -1.0;
    const double half = 0.5 * d * hs;
    c1[d] = 0.5 * sgn / std::tan(half);
    c2[d] = -0.5 * sgn / (std::sin(half) * std::sin(half));
    c1[n - d] = -c1[d];
    c2[n - d] = c2[d];
  }
  if (n % 2 == 0) c1[n / 2] = 0.0;
  m.d1.resize(n, n);
  m.d2.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const int d = ((j - k) % n + n) % n;
      m.d1(j, k) = scale * c1[d];
      m.d2(j, k) = scale * scale * c2[d];
    }
  return m;
}

// Orthonormal DST-II frame: column q-1 holds sine mode q sampled at cell centres.
inline MatrixXd sine_frame(int n) {
  MatrixXd q(n, n);
  for (int j = 0; j < n; ++j)
    for (int mode = 1; mode <= n; ++mode) {
      const double s = std::sin(pi * mode * (j + 0.5) / n);
      q(j, mode - 1) = (mode == n ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n)) * s;
    }
  return q;
}

inline AxisMatrices dirichlet_axis(int n, double l) {
  const double w = 2.0 * l;
  MatrixXd xm = MatrixXd::Zero(n, n), dm = MatrixXd::Zero(n, n), tm = MatrixXd::Zero(n, n);
  for (int a = 1; a <= n; ++a) {
    tm(a - 1, a - 1) = -std::pow(a * pi / w, 2);
    for (int b = a + 1; b <= n; ++b) {
      if ((a + b) % 2 == 0) continue;
      const double diff = double(a) * a - double(b) * b;
      const double xv = -8.0 * w * a * b / (pi * pi * diff * diff);
      const double dv = 4.0 * a * b / (w * diff);
      xm(a - 1, b - 1) = xm(b - 1, a - 1) = xv;
      dm(a - 1, b - 1) = dv;
      dm(b - 1, a - 1) = -dv;
    }
  }
  const MatrixXd q = sine_frame(n);
  AxisMatrices m;
  m.position = q * xm * q.transpose();
  m.d1 = q * dm * q.transpose();
  m.d2 = q * tm * q.transpose();
  m.position = 0.5 * (m.position + m.position.transpose()).eval();
  m.d1 = 0.5 * (m.d1 - m.d1.transpose()).eval();
  m.d2 = 0.5 * (m.d2 + m.d2.transpose()).eval();
  m.position_diagonal = false;
  return m;
}

}  // namespace detail

inline AxisMatrices axis_matrices(const Grid2D& g, Axis a) {
  const int n = a == Axis::x ? g.nx() : g.ny();
  const double l = a == Axis::x ? g.lx() : g.ly();
  return g.boundary() == Boundary::periodic ? detail::periodic_axis(n, l) : detail::dirichlet_axis(n, l);
}

}  // namespace ncqm
