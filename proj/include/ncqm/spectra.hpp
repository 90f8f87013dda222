#pragma once

// Eigensolvers for the discrete Hamiltonians and the closed-form reference
// solutions: Airy profile for the linear potential, NC oscillator levels and
// Hermite-Gauss states.

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <nlohmann/json.hpp>

#include "operator.hpp"
#include "special.hpp"

namespace ncqm {

enum class EigenMethod { automatic, dense, lanczos, separable };

inline const char* to_string(EigenMethod m) {
  switch (m) {
    case EigenMethod::automatic: return "auto";
    case EigenMethod::dense: return "dense";
    case EigenMethod::lanczos: return "lanczos";
    case EigenMethod::separable: return "separable";
  }
  return "auto";
}

inline EigenMethod eigen_method_from_string(const std::string& s) {
  if (s == "auto") return EigenMethod::automatic;
  if (s == "dense") return EigenMethod::dense;
  if (s == "lanczos") return EigenMethod::lanczos;
  if (s == "separable") return EigenMethod::separable;
  throw Error(ErrorKind::invalid_argument, "unknown eigen method '" + s + "'");
}

struct SpectrumResult {
  VectorXd eigenvalues;                  // ascending
  std::vector<WaveFunction> eigenvectors;  // unit norm (grid inner product)
  VectorXd residuals;                    // ||H v - lambda v||
  EigenMethod method = EigenMethod::dense;
  bool converged = true;
  int iterations = 0;
};

inline void to_json(nlohmann::json& j, const SpectrumResult& r) {
  j = {{"eigenvalues", std::vector<double>(r.eigenvalues.begin(), r.eigenvalues.end())},
       {"residuals", std::vector<double>(r.residuals.begin(), r.residuals.end())},
       {"method", to_string(r.method)},
       {"converged", r.converged},
       {"iterations", r.iterations}};
}

/// CSV rows x,y,re,im over the whole grid.
inline void write_wavefunction_csv(std::ostream& os, const WaveFunction& psi) {
  const Grid2D& g = psi.grid();
  os << "x,y,re,im\n";
  char buf[128];
  for (int iy = 0; iy < g.ny(); ++iy)
    for (int ix = 0; ix < g.nx(); ++ix) {
      const cd v = psi(ix, iy);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", g.x(ix), g.y(iy), v.real(), v.imag());
      os << buf;
    }
}

namespace detail {

// Unit grid norm with the largest component real and positive.
inline WaveFunction canonical_vector(const Grid2D& g, VectorXcd v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cd phase = std::abs(v[imax]) > 0 ? std::conj(v[imax]) / std::abs(v[imax]) : cd(1.0);
  v *= phase / (v.norm() * std::sqrt(g.cell()));
  return WaveFunction(g, std::move(v));
}

inline void fill_residuals(const OperatorMatrix& h, SpectrumResult& r) {
  r.residuals.resize(r.eigenvalues.size());
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
    const WaveFunction& v = r.eigenvectors[size_t(i)];
    r.residuals[i] = (h(v) - r.eigenvalues[i] * v).norm() / v.norm();
  }
}

// Lowest k eigenpairs of a dense hermitian matrix (LAPACK zheevr).
inline std::pair<VectorXd, MatrixXcd> dense_lowest(MatrixXcd a, int k) {
  const lapack_int n = lapack_int(a.rows());
  VectorXd w(n);
  MatrixXcd z(n, k);
  std::vector<lapack_int> support(2 * size_t(std::max(k, 1)));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, k, 0.0,
                                         &found, w.data(), z.data(), n, support.data());
  require(info == 0 && found == k, ErrorKind::convergence, "zheevr failed (info " + std::to_string(info) + ")");
  return {w.head(k), z};
}

inline std::pair<VectorXd, MatrixXcd> dense_all(MatrixXcd a) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
  require(es.info() == Eigen::Success, ErrorKind::convergence, "dense eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace detail

inline SpectrumResult solve_dense(const OperatorMatrix& h, int k) {
  auto [w, z] = detail::dense_lowest(h.to_dense(), k);
  SpectrumResult r;
  r.method = EigenMethod::dense;
  r.eigenvalues = w;
  for (int i = 0; i < k; ++i) r.eigenvectors.push_back(detail::canonical_vector(h.grid(), z.col(i)));
  return r;
}

/// Kronecker-sum H = I (x) Ax + Ay (x) I: diagonalize both factors and combine.
inline SpectrumResult solve_separable(const OperatorMatrix& h, int k) {
  require(h.is_kronecker_sum(), ErrorKind::invalid_argument, "separable solver needs a Kronecker-sum operator");
  auto [ax, ay] = h.kronecker_sum_parts();
  auto [wx, vx] = detail::dense_all(ax);
  auto [wy, vy] = detail::dense_all(ay);
  const int nx = int(wx.size()), ny = int(wy.size());
  std::vector<std::pair<int, int>> idx;
  idx.reserve(size_t(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) idx.emplace_back(i, j);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](auto a, auto b) {
    const double ea = wx[a.first] + wy[a.second], eb = wx[b.first] + wy[b.second];
    return ea != eb ? ea < eb : a < b;
  });
  SpectrumResult r;
  r.method = EigenMethod::separable;
  r.eigenvalues.resize(k);
  for (int q = 0; q < k; ++q) {
    const auto [i, j] = idx[size_t(q)];
    r.eigenvalues[q] = wx[i] + wy[j];
    VectorXcd v(nx * ny);
    for (int b = 0; b < ny; ++b) v.segment(b * nx, nx) = vy(b, j) * vx.col(i);
    r.eigenvectors.push_back(detail::canonical_vector(h.grid(), std::move(v)));
  }
  return r;
}

struct LanczosOptions {
  int max_iter = 600;     // Krylov dimension cap per sweep
  double tol = 1e-10;     // Ritz residual relative to max(|lambda|, 1)
  std::uint64_t seed = 20240611;
};

/// Lanczos with full reorthogonalization. Converged vectors are locked and the
/// process is repeated in their orthogonal complement until no new level
/// appears below the k-th, which recovers degenerate multiplicities.
inline SpectrumResult solve_lanczos(const OperatorMatrix& h, int k, LanczosOptions opt = {}) {
  const int n = h.dim();
  require(k < n, ErrorKind::invalid_argument, "lanczos needs k < dim");
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;

  std::vector<VectorXcd> locked;
  std::vector<double> locked_vals;
  SpectrumResult r;
  r.method = EigenMethod::lanczos;
  r.converged = true;

  auto project_out = [&](VectorXcd& v, const std::vector<VectorXcd>& basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b * b.dot(v);
  };

  for (int sweep = 0; sweep <= k; ++sweep) {
    const int want = std::min(k, n - int(locked.size()));
    if (want <= 0) break;
    VectorXcd q(n);
    for (int i = 0; i < n; ++i) q[i] = cd(nd(rng), nd(rng));
    project_out(q, locked);
    q.normalize();

    std::vector<VectorXcd> basis{q};
    std::vector<double> alpha, beta;
    const int cap = std::min(opt.max_iter, n - int(locked.size()));
    VectorXd ritz;
    MatrixXd s;
    bool done = false;
    int m = 0;
    for (m = 1; m <= cap; ++m) {
      VectorXcd w = h.apply(basis.back());
      alpha.push_back(basis.back().dot(w).real());
      project_out(w, basis);
      project_out(w, locked);
      const double b = w.norm();
      ++r.iterations;
      if (m >= want && (m % 10 == 0 || m == cap || b < 1e-14)) {
        MatrixXd t = MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) t(i, i) = alpha[size_t(i)];
        for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[size_t(i)];
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
        ritz = es.eigenvalues();
        s = es.eigenvectors();
        done = true;
        for (int i = 0; i < want && done; ++i)
          done = std::abs(b * s(m - 1, i)) <= opt.tol * std::max(std::abs(ritz[i]), 1.0);
        if (done || m == cap || b < 1e-14) break;
      }
      if (b < 1e-14) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }
    if (!done) r.converged = false;
    const int got = std::min<int>(want, int(ritz.size()));
    const double kth = locked_vals.size() >= size_t(k) ? locked_vals[size_t(k) - 1] : INFINITY;
    bool news = false;
    for (int i = 0; i < got; ++i) {
      VectorXcd v = VectorXcd::Zero(n);
      for (int j = 0; j < int(s.rows()); ++j) v += s(j, i) * basis[size_t(j)];
      v.normalize();
      if (!std::isfinite(kth) || ritz[i] < kth - opt.tol * std::max(1.0, std::abs(kth))) news = true;
      locked.push_back(std::move(v));
      locked_vals.push_back(ritz[i]);
    }
    // keep the locked set sorted
    std::vector<size_t> order(locked.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return locked_vals[a] < locked_vals[b]; });
    std::vector<VectorXcd> lv;
    std::vector<double> lw;
    for (size_t i : order) {
      lv.push_back(locked[i]);
      lw.push_back(locked_vals[i]);
    }
    locked.swap(lv);
    locked_vals.swap(lw);
    if (!news || !r.converged) break;
  }
  const int got = std::min<int>(k, int(locked.size()));
  r.eigenvalues.resize(got);
  for (int i = 0; i < got; ++i) {
    r.eigenvalues[i] = locked_vals[size_t(i)];
    r.eigenvectors.push_back(detail::canonical_vector(h.grid(), locked[size_t(i)]));
  }
  if (got < k) r.converged = false;
  return r;
}

/// k lowest eigenpairs. automatic: dense up to dim 4096, then separable for
/// Kronecker sums, otherwise Lanczos.
inline SpectrumResult solve_eigen(const OperatorMatrix& h, int k, EigenMethod method = EigenMethod::automatic,
                                  LanczosOptions opt = {}) {
  require(h.hermitian(), ErrorKind::hermiticity, "eigensolver needs an operator marked hermitian");
  require(k >= 1 && k <= h.dim(), ErrorKind::invalid_argument, "k must be in [1, dim]");
  if (method == EigenMethod::automatic)
    method = h.dim() <= 4096 ? EigenMethod::dense
                             : (h.is_kronecker_sum() ? EigenMethod::separable : EigenMethod::lanczos);
  SpectrumResult r;
  switch (method) {
    case EigenMethod::dense: r = solve_dense(h, k); break;
    case EigenMethod::separable: r = solve_separable(h, k); break;
    default: r = solve_lanczos(h, k, opt); break;
  }
  detail::fill_residuals(h, r);
  return r;
}

struct QuantumNumbers {
  int n1 = 0, n2 = 0;
  QuantumNumbers() = default;
  QuantumNumbers(int a, int b) : n1(a), n2(b) {
    require(a >= 0 && b >= 0, ErrorKind::invalid_argument, "quantum numbers must be non-negative");
  }
};

/// beta = omega^2 (1 + theta^2 omega^2 / 4)
struct StiffnessBeta {
  double beta;
  StiffnessBeta(double omega, ThetaTensor theta) {
    require(std::isfinite(omega) && omega > 0, ErrorKind::invalid_argument, "omega must be positive");
    const double t = theta.value();
    beta = omega * omega * (1.0 + t * t * omega * omega / 4.0);
  }
};

/// sqrt(1 + theta^2 omega^2 / 4) omega (n1 + n2 + 1)
inline double nc_ho_energy(QuantumNumbers q, double omega, ThetaTensor theta) {
  return std::sqrt(StiffnessBeta(omega, theta).beta) * (q.n1 + q.n2 + 1);
}

/// Exact levels of the discretization-free NC oscillator (hbar = m = 1):
/// Omega (n+ + n- + 1) + (theta omega^2 / 2)(n+ - n-), Omega = sqrt(beta).
/// The closed form above is its m = n+ - n- = 0 tower.
inline std::vector<double> nc_ho_exact_levels(double omega, ThetaTensor theta, int count) {
  const double big_omega = std::sqrt(StiffnessBeta(omega, theta).beta);
  const double split = 0.5 * theta.value() * omega * omega;
  std::vector<double> levels;
  const int shells = count + 2;
  for (int np = 0; np < shells; ++np)
    for (int nm = 0; nm < shells; ++nm) levels.push_back(big_omega * (np + nm + 1) + split * (np - nm));
  std::sort(levels.begin(), levels.end());
  levels.resize(size_t(count));
  return levels;
}

/// exp(-omega^2 r^2 / (2 sqrt(beta))) H_n1(omega x / beta^(1/4)) H_n2(omega y / beta^(1/4)),
/// normalized on the grid.
inline WaveFunction nc_ho_wavefunction(QuantumNumbers q, double omega, ThetaTensor theta, const Grid2D& grid) {
  const double beta = StiffnessBeta(omega, theta).beta;
  const double s = omega / std::pow(beta, 0.25);
  auto f = [&](double x, double y) {
    const double u = s * x, v = s * y;
    return std::exp(-0.5 * (u * u + v * v)) * hermite_poly(q.n1, u) * hermite_poly(q.n2, v);
  };
  return WaveFunction::sample(grid, f).normalized();
}

enum class AiryArgument {
  corrected,  // Ai((E - z) / c), c = (alpha^2 + beta^2)^(1/3)
  paper,      // Ai(z - E), unscaled
};

/// Profile solving (alpha^2 + beta^2) psi'' + (z - E) psi = 0 along z = alpha x + beta y.
inline double linear_profile(double alpha, double beta, double energy, double z,
                             AiryArgument arg = AiryArgument::corrected) {
  require(alpha != 0.0 || beta != 0.0, ErrorKind::invalid_argument, "linear profile needs (alpha, beta) != (0, 0)");
  if (arg == AiryArgument::paper) return airy_ai(z - energy);
  const double c = std::cbrt(alpha * alpha + beta * beta);
  return airy_ai((energy - z) / c);
}

inline WaveFunction linear_solution(double alpha, double beta, double energy, const Grid2D& grid,
                                    AiryArgument arg = AiryArgument::corrected) {
  return WaveFunction::sample(
      grid, [&](double x, double y) { return linear_profile(alpha, beta, energy, alpha * x + beta * y, arg); });
}

/// max |(alpha^2 + beta^2) psi'' + (z - E) psi| over the sample points, with
/// psi'' from a fourth-order central difference of step h.
inline double linear_ode_residual(double alpha, double beta, double energy, const std::vector<double>& zs,
                                  AiryArgument arg = AiryArgument::corrected, double h = 1e-3) {
  const double a2 = alpha * alpha + beta * beta;
  auto psi = [&](double z) { return linear_profile(alpha, beta, energy, z, arg); };
  double worst = 0.0;
  for (double z : zs) {
    const double d2 = (-psi(z + 2 * h) + 16 * psi(z + h) - 30 * psi(z) + 16 * psi(z - h) - psi(z - 2 * h)) /
                      (12 * h * h);
    worst = std::max(worst, std::abs(a2 * d2 + (z - energy) * psi(z)));
  }
  return worst;
}

}  // namespace ncqm
