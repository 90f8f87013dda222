#pragma once

// Experiment runner behind the ncqm command line: strict JSON configs,
// dispatch to the library, atomic result directories.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "algebra.hpp"
#include "dynamics.hpp"
#include "hamiltonian.hpp"
#include "perturbation.hpp"
#include "spectra.hpp"

namespace ncqm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_io = 4 };

inline const std::vector<std::string>& experiments() {
  static const std::vector<std::string> names{"algebra-check", "star", "spectrum", "linear",
                                              "evolve",        "ehrenfest", "perturb", "errata"};
  return names;
}

inline json default_config() {
  return json{
      {"experiment", "spectrum"},
      {"grid", {{"nx", 64}, {"ny", 64}, {"lx", 8.0}, {"ly", 8.0}, {"boundary", "periodic"}}},
      {"phys", {{"mass", 1.0}, {"hbar", 1.0}}},
      {"theta", 0.0},
      {"convention", "literal"},
      {"potential", json(PolynomialPotential::harmonic(1.0, 1.0))},
      {"solver", {{"k", 4}, {"method", "auto"}, {"tol", 1e-10}, {"max_iter", 600}}},
      {"evolution",
       {{"dt", 1e-3},
        {"steps", 1000},
        {"tol", 1e-12},
        {"max_iter", 500},
        {"initial", {{"x0", 0.0}, {"y0", 0.0}, {"sigma", 1.0}, {"kx", 0.0}, {"ky", 0.0}}}}},
      {"boost", {{"t", 0.0}, {"vx", 1.0}, {"vy", 0.0}}},
      {"algebra", {{"tol", 1e-6}, {"n_states", 5}}},
      {"star",
       {{"f", json(PolynomialPotential::monomial(1, 0))},
        {"g", json(PolynomialPotential::monomial(0, 1))},
        {"max_order", 8}}},
      {"perturbation",
       {{"n1", 0}, {"n2", 0}, {"omega", 1.0}, {"alpha_c", 0.0}, {"gamma", 0.01}, {"basis_size", 12}}},
      {"errata", {{"max_n", 10}}},
      {"linear", {{"alpha", 1.0}, {"beta", 0.7}, {"energy", 0.0}}},
      {"seed", 1},
      {"outdir", ""},
      {"sweep", nullptr},
  };
}

namespace detail {

// Subtrees validated by their own parsers rather than key-by-key.
inline bool free_form(const std::string& path) {
  return path == "potential" || path == "star.f" || path == "star.g" || path == "sweep";
}

inline bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && !b.is_number_integer());
  return a.type() == b.type();
}

inline void merge_strict(json& base, const json& over, const std::string& prefix) {
  require(over.is_object(), ErrorKind::invalid_argument, (prefix.empty() ? "config" : prefix) + " must be an object");
  for (const auto& [k, v] : over.items()) {
    const std::string path = prefix.empty() ? k : prefix + "." + k;
    require(base.contains(k), ErrorKind::invalid_argument, "unknown config key '" + path + "'");
    if (free_form(path)) {
      base[k] = v;
    } else if (base[k].is_object()) {
      merge_strict(base[k], v, path);
    } else {
      require(same_kind(base[k], v), ErrorKind::invalid_argument,
              "config key '" + path + "' has the wrong type (expected " + std::string(base[k].type_name()) + ")");
      base[k] = v.is_number_integer() && base[k].is_number_float() ? json(v.get<double>()) : v;
    }
  }
}

inline json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

}  // namespace detail

/// Applies "a.b.c=value" (value parsed as JSON, else taken as a string).
inline void apply_override(json& overrides, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorKind::invalid_argument,
          "--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  json* node = &overrides;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    require(!part.empty(), ErrorKind::invalid_argument, "empty path segment in '" + key + "'");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (!next.is_object()) next = json::object();
    node = &next;
  }
  (*node)[parts.back()] = detail::parse_value(assignment.substr(eq + 1));
}

/// A config merged over the defaults and checked against every module precondition.
class RunConfig {
 public:
  explicit RunConfig(const json& user) : j_(default_config()) {
    detail::merge_strict(j_, user, "");
    validate();
  }

  const json& resolved() const { return j_; }
  const json& operator[](const char* k) const { return j_.at(k); }
  std::string experiment() const { return j_.at("experiment").get<std::string>(); }

  Grid2D grid() const {
    const auto& g = j_.at("grid");
    const std::string b = g.at("boundary").get<std::string>();
    require(b == "periodic" || b == "dirichlet", ErrorKind::invalid_argument, "grid.boundary must be periodic|dirichlet");
    return Grid2D(g.at("nx").get<int>(), g.at("ny").get<int>(), g.at("lx").get<double>(), g.at("ly").get<double>(),
                  b == "periodic" ? Boundary::periodic : Boundary::dirichlet);
  }
  PhysParams phys() const {
    PhysParams p{j_.at("phys").at("mass").get<double>(), j_.at("phys").at("hbar").get<double>()};
    p.validate();
    return p;
  }
  ThetaConvention convention() const {
    return j_.at("convention").get<std::string>() == "literal" ? ThetaConvention::literal : ThetaConvention::flipped;
  }
  ThetaTensor theta() const { return ThetaTensor(j_.at("theta").get<double>()); }
  /// theta as it enters the operators under the chosen convention
  ThetaTensor effective_theta() const {
    return convention() == ThetaConvention::literal ? theta() : theta().flipped();
  }
  PolynomialPotential potential() const { return j_.at("potential").get<PolynomialPotential>(); }
  std::uint64_t seed() const { return j_.at("seed").get<std::uint64_t>(); }

 private:
  void validate() const {
    const std::string e = experiment();
    require(std::find(experiments().begin(), experiments().end(), e) != experiments().end(),
            ErrorKind::invalid_argument, "unknown experiment '" + e + "'");
    const std::string conv = j_.at("convention").get<std::string>();
    require(conv == "literal" || conv == "flipped", ErrorKind::invalid_argument,
            "convention must be literal|flipped");
    require(j_.at("seed").is_number_unsigned() || j_.at("seed").get<long long>() >= 0, ErrorKind::invalid_argument,
            "seed must be non-negative");
    (void)grid();
    (void)phys();
    (void)theta();
    const PolynomialPotential v = potential();
    (void)j_.at("star").at("f").get<PolynomialPotential>();
    (void)j_.at("star").at("g").get<PolynomialPotential>();
    require(j_.at("star").at("max_order").get<int>() >= 0, ErrorKind::invalid_argument, "star.max_order must be >= 0");
    const auto& s = j_.at("solver");
    require(s.at("k").get<int>() >= 1, ErrorKind::invalid_argument, "solver.k must be >= 1");
    (void)eigen_method_from_string(s.at("method").get<std::string>());
    require(s.at("tol").get<double>() > 0 && s.at("max_iter").get<int>() >= 1, ErrorKind::invalid_argument,
            "solver.tol and solver.max_iter must be positive");
    const auto& ev = j_.at("evolution");
    require(ev.at("dt").get<double>() != 0.0 && std::isfinite(ev.at("dt").get<double>()),
            ErrorKind::invalid_argument, "evolution.dt must be finite and nonzero");
    require(ev.at("steps").get<int>() >= 0, ErrorKind::invalid_argument, "evolution.steps must be >= 0");
    require(ev.at("tol").get<double>() > 0 && ev.at("max_iter").get<int>() >= 1, ErrorKind::invalid_argument,
            "evolution.tol and evolution.max_iter must be positive");
    require(ev.at("initial").at("sigma").get<double>() > 0, ErrorKind::invalid_argument,
            "evolution.initial.sigma must be positive");
    require(j_.at("algebra").at("tol").get<double>() > 0, ErrorKind::invalid_argument, "algebra.tol must be positive");
    require(j_.at("algebra").at("n_states").get<int>() >= 5, ErrorKind::invalid_argument,
            "algebra.n_states must be >= 5");
    const auto& p = j_.at("perturbation");
    const QuantumNumbers q(p.at("n1").get<int>(), p.at("n2").get<int>());
    require(p.at("basis_size").get<int>() >= std::max(q.n1, q.n2) + 5, ErrorKind::invalid_argument,
            "perturbation.basis_size must be >= max(n1, n2) + 5");
    PerturbationSetup{q, p.at("omega").get<double>(), theta(), p.at("alpha_c").get<double>(),
                      p.at("gamma").get<double>()}
        .validate();
    const int max_n = j_.at("errata").at("max_n").get<int>();
    require(max_n >= 0 && max_n <= 20, ErrorKind::invalid_argument, "errata.max_n must be in [0, 20]");
    const auto& l = j_.at("linear");
    require(l.at("alpha").get<double>() != 0.0 || l.at("beta").get<double>() != 0.0, ErrorKind::invalid_argument,
            "linear needs (alpha, beta) != (0, 0)");
    if (e == "spectrum" || e == "evolve" || e == "ehrenfest")
      require(v.is_real() && !v.empty(), ErrorKind::invalid_argument, "potential must be real and non-empty");
    if (e == "linear")
      require(grid().boundary() == Boundary::dirichlet, ErrorKind::unsupported_boundary,
              "linear experiment needs grid.boundary = dirichlet");
    if (e == "algebra-check")
      require(grid().boundary() == Boundary::periodic, ErrorKind::unsupported_boundary,
              "algebra-check needs grid.boundary = periodic");
    if (!j_.at("sweep").is_null()) {
      const auto& sw = j_.at("sweep");
      ncqm::detail::reject_unknown(sw, {"path", "values"}, "sweep");
      require(sw.contains("path") && sw.at("path").is_string() && sw.contains("values") &&
                  sw.at("values").is_array() && !sw.at("values").empty(),
              ErrorKind::invalid_argument, "sweep needs a string 'path' and a non-empty 'values' array");
    }
  }

  json j_;
};

/// Files produced by one experiment, keyed by file name.
struct RunOutput {
  json summary;
  std::map<std::string, std::string> files;
  std::string line;  // one-line human summary
  bool numerical_failure = false;
};

namespace detail {

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline WaveFunction gaussian_packet(const Grid2D& g, const json& init) {
  const double x0 = init.at("x0").get<double>(), y0 = init.at("y0").get<double>();
  const double s = init.at("sigma").get<double>(), kx = init.at("kx").get<double>(), ky = init.at("ky").get<double>();
  return WaveFunction::sample(g, [&](double x, double y) {
           const double dx = x - x0, dy = y - y0;
           return std::exp(-(dx * dx + dy * dy) / (2 * s * s)) * std::exp(I * (kx * x + ky * y));
         })
      .normalized();
}

inline RunOutput run_algebra(const RunConfig& c) {
  const auto& b = c["boost"];
  const BoostContext ctx{b.at("t").get<double>(), b.at("vx").get<double>(), b.at("vy").get<double>()};
  const double tol = c["algebra"].at("tol").get<double>();
  const Generators g(c.grid(), c.phys(), c.theta(), ctx, c.convention());
  const auto states = random_test_states(c.grid(), c["algebra"].at("n_states").get<int>(), c.seed());
  const AlgebraReport rep = check_exotic_algebra(g, tol, states);
  const BoostCheck bc = boost_derivative_check(g, states);
  const CasimirResult cas = casimir_invariants(g, tol, states);
  RunOutput out;
  out.summary = {{"algebra", rep},
                 {"boost_law", {{"residual_p1", bc.residual_p1}, {"residual_p2", bc.residual_p2},
                                {"pass", bc.max_residual() <= tol}}},
                 {"casimir", cas.report}};
  std::string csv = "relation,residual,tolerance,pass\n";
  for (const auto* r : {&rep, &cas.report})
    for (const auto& rel : r->relations)
      csv += "\"" + rel.name + "\"," + csv_number(rel.residual) + "," + csv_number(rel.tolerance) + "," +
             (rel.pass ? "true" : "false") + "\n";
  out.files["relations.csv"] = csv;
  const bool ok = rep.all_pass() && cas.report.all_pass() && bc.max_residual() <= tol;
  out.line = std::string("algebra-check: ") + (ok ? "all relations pass" : "some relations FAIL");
  return out;
}

inline RunOutput run_star(const RunConfig& c) {
  const auto& s = c["star"];
  const auto f = s.at("f").get<PolynomialPotential>(), g = s.at("g").get<PolynomialPotential>();
  const int order = s.at("max_order").get<int>();
  const StarProduct fg = moyal_star(f, g, c.effective_theta(), order);
  const StarProduct gf = moyal_star(g, f, c.effective_theta(), order);
  RunOutput out;
  out.summary = {{"product", fg.value}, {"truncated", fg.truncated}, {"star_commutator", fg.value - gf.value}};
  std::string csv = "ax,ay,re,im\n";
  for (const auto& [m, v] : fg.value.coefficients())
    csv += std::to_string(m.first) + "," + std::to_string(m.second) + "," + csv_number(v.real()) + "," +
           csv_number(v.imag()) + "\n";
  out.files["star.csv"] = csv;
  out.line = "star: " + std::to_string(fg.value.coefficients().size()) + " monomials" +
             (fg.truncated ? " (truncated)" : "");
  return out;
}

inline RunOutput run_spectrum(const RunConfig& c) {
  const Grid2D grid = c.grid();
  const PolynomialPotential v = c.potential();
  const OperatorMatrix h = build_nc_hamiltonian(v, grid, c.phys(), c.effective_theta());
  const auto& s = c["solver"];
  LanczosOptions lo;
  lo.tol = s.at("tol").get<double>();
  lo.max_iter = s.at("max_iter").get<int>();
  lo.seed = c.seed();
  const SpectrumResult r =
      solve_eigen(h, s.at("k").get<int>(), eigen_method_from_string(s.at("method").get<std::string>()), lo);
  RunOutput out;
  out.summary = {{"spectrum", r}};
  // isotropic unit-mass oscillator: attach the closed-form references
  const bool iso = v.coefficients().size() == 2 && v.coeff(2, 0) == v.coeff(0, 2) && v.coeff(2, 0).real() > 0 &&
                   c.phys().mass == 1.0 && c.phys().hbar == 1.0;
  if (iso) {
    const double w = v.omega_x();
    out.summary["reference"] = {
        {"omega", w},
        {"paper_tower", {nc_ho_energy({0, 0}, w, c.theta()), nc_ho_energy({1, 1}, w, c.theta())}},
        {"exact_levels", nc_ho_exact_levels(w, c.effective_theta(), int(r.eigenvalues.size()))}};
  }
  std::string csv = "index,eigenvalue,residual\n";
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i)
    csv += std::to_string(i) + "," + csv_number(r.eigenvalues[i]) + "," + csv_number(r.residuals[i]) + "\n";
  out.files["eigenvalues.csv"] = csv;
  std::ostringstream ev;
  write_wavefunction_csv(ev, r.eigenvectors.front());
  out.files["eigenvector_0.csv"] = ev.str();
  out.numerical_failure = !r.converged;
  out.line = "spectrum: E0 = " + csv_number(r.eigenvalues[0]) + (r.converged ? "" : " (NOT converged)");
  return out;
}

inline RunOutput run_linear(const RunConfig& c) {
  const Grid2D grid = c.grid();
  const auto& l = c["linear"];
  const double a = l.at("alpha").get<double>(), b = l.at("beta").get<double>(), e = l.at("energy").get<double>();
  const int k = c["solver"].at("k").get<int>();
  const EigenMethod m = eigen_method_from_string(c["solver"].at("method").get<std::string>());
  const SpectrumResult r0 = solve_eigen(build_linear_hamiltonian(a, b, grid, c.phys(), ThetaTensor{}), k, m);
  const double th = c.effective_theta().value();
  const SpectrumResult rt = solve_eigen(build_linear_hamiltonian(a, b, grid, c.phys(), c.effective_theta()), k, m);
  const double expected = -th * th * (a * a + b * b) / 8.0;
  std::string csv = "index,e_theta,e_zero,shift,expected_shift,modulus_diff\n";
  json levels = json::array();
  double worst_shift = 0.0, worst_mod = 0.0;
  for (int i = 0; i < k; ++i) {
    const double md = (rt.eigenvectors[size_t(i)].amplitudes().cwiseAbs() -
                       r0.eigenvectors[size_t(i)].amplitudes().cwiseAbs())
                          .cwiseAbs()
                          .maxCoeff();
    const double shift = rt.eigenvalues[i] - r0.eigenvalues[i];
    worst_shift = std::max(worst_shift, std::abs(shift - expected));
    worst_mod = std::max(worst_mod, md);
    levels.push_back({{"e_theta", rt.eigenvalues[i]}, {"e_zero", r0.eigenvalues[i]}, {"shift", shift},
                      {"modulus_diff", md}});
    csv += std::to_string(i) + "," + csv_number(rt.eigenvalues[i]) + "," + csv_number(r0.eigenvalues[i]) + "," +
           csv_number(shift) + "," + csv_number(expected) + "," + csv_number(md) + "\n";
  }
  std::vector<double> zs;
  for (int i = 0; i <= 40; ++i) zs.push_back(-8.0 + 0.4 * i);
  RunOutput out;
  out.summary = {{"levels", levels},
                 {"expected_shift", expected},
                 {"max_shift_error", worst_shift},
                 {"max_modulus_diff", worst_mod},
                 {"airy_residual_corrected", linear_ode_residual(a, b, e, zs, AiryArgument::corrected)},
                 {"airy_residual_paper", linear_ode_residual(a, b, e, zs, AiryArgument::paper)}};
  out.files["levels.csv"] = csv;
  out.line = "linear: max shift error " + csv_number(worst_shift) + ", max modulus diff " + csv_number(worst_mod);
  return out;
}

inline RunOutput run_evolve(const RunConfig& c, bool ehrenfest) {
  const Grid2D grid = c.grid();
  const PolynomialPotential v = c.potential();
  const ThetaTensor th = c.effective_theta();
  const OperatorMatrix h = build_nc_hamiltonian(v, grid, c.phys(), th);
  const auto& ev = c["evolution"];
  EvolveOptions opt;
  opt.phys = c.phys();
  opt.theta = th;
  opt.tol = ev.at("tol").get<double>();
  opt.max_iter = ev.at("max_iter").get<int>();
  opt.store_states = ehrenfest;
  const EvolutionTrace tr =
      evolve(h, gaussian_packet(grid, ev.at("initial")), ev.at("dt").get<double>(), ev.at("steps").get<int>(), opt);
  RunOutput out;
  out.summary = {{"trace", trace_metadata(tr, grid, v)},
                 {"final", {{"t", tr.times.back()}, {"x1", tr.x1.back()}, {"x2", tr.x2.back()},
                            {"p1", tr.p1.back()}, {"p2", tr.p2.back()}, {"energy", tr.energy.back()},
                            {"norm", tr.norm.back()}}}};
  std::ostringstream os;
  write_trace_csv(os, tr);
  out.files["trace.csv"] = os.str();
  out.line = "evolve: " + std::to_string(tr.size() - 1) + " steps, norm drift " +
             csv_number(out.summary["trace"]["norm_drift"].get<double>());
  if (ehrenfest) {
    const EhrenfestResidual r = ehrenfest_residuals(tr, v, th, c.phys());
    out.summary["ehrenfest"] = r;
    std::string csv = "t,r_x1,r_x2,r_p1,r_p2\n";
    for (std::size_t i = 0; i < r.times.size(); ++i)
      csv += csv_number(r.times[i]) + "," + csv_number(r.r_x[0][i]) + "," + csv_number(r.r_x[1][i]) + "," +
             csv_number(r.r_p[0][i]) + "," + csv_number(r.r_p[1][i]) + "\n";
    out.files["ehrenfest.csv"] = csv;
    out.line = "ehrenfest: max residual " + csv_number(r.max_abs());
  }
  return out;
}

inline RunOutput run_perturb(const RunConfig& c) {
  const auto& p = c["perturbation"];
  const PerturbationSetup s{QuantumNumbers(p.at("n1").get<int>(), p.at("n2").get<int>()), p.at("omega").get<double>(),
                            c.effective_theta(), p.at("alpha_c").get<double>(), p.at("gamma").get<double>()};
  const ShiftResult r = first_order_shift(s, p.at("basis_size").get<int>());
  const double paper = paper_delta_e(s);
  RunOutput out;
  out.summary = {{"oracle", r}, {"paper_delta_e", paper}, {"difference", paper - r.shift}};
  out.files["shift.csv"] = "oracle,paper,difference\n" + csv_number(r.shift) + "," + csv_number(paper) + "," +
                           csv_number(paper - r.shift) + "\n";
  out.numerical_failure = !r.converged;
  out.line = "perturb: oracle " + csv_number(r.shift) + ", paper " + csv_number(paper);
  return out;
}

inline RunOutput run_errata(const RunConfig& c) {
  const ErrataReport rep = verify_integral_identities(c["errata"].at("max_n").get<int>());
  RunOutput out;
  out.summary = {{"errata", rep}};
  std::string csv = "id,n,paper,oracle,difference,relative_difference,agree\n";
  int mismatches = 0;
  for (const auto& id : rep.identities)
    for (const auto& e : id.entries) {
      mismatches += !e.agree;
      csv += id.id + "," + std::to_string(e.n) + "," + csv_number(e.paper) + "," + csv_number(e.oracle) + "," +
             csv_number(e.difference) + "," + csv_number(e.relative_difference) + "," + (e.agree ? "true" : "false") +
             "\n";
    }
  out.files["errata.csv"] = csv;
  out.line = "errata: " + std::to_string(mismatches) + " paper/oracle mismatches";
  return out;
}

inline std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  os.close();
  if (!os) throw Error(ErrorKind::io, "cannot write " + p.string());
}

}  // namespace detail

/// Runs one configured experiment (no sweep) and returns its outputs.
inline RunOutput execute(const RunConfig& c) {
  const std::string e = c.experiment();
  RunOutput out;
  if (e == "algebra-check") out = detail::run_algebra(c);
  else if (e == "star") out = detail::run_star(c);
  else if (e == "spectrum") out = detail::run_spectrum(c);
  else if (e == "linear") out = detail::run_linear(c);
  else if (e == "evolve") out = detail::run_evolve(c, false);
  else if (e == "ehrenfest") out = detail::run_evolve(c, true);
  else if (e == "perturb") out = detail::run_perturb(c);
  else out = detail::run_errata(c);
  out.summary["config"] = c.resolved();
  out.summary["experiment"] = e;
  return out;
}

/// Writes summary.json and the data files into dir (created).
inline void write_outputs(const fs::path& dir, const RunOutput& out) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  detail::write_file(dir / "summary.json", out.summary.dump(2) + "\n");
  for (const auto& [name, text] : out.files) detail::write_file(dir / name, text);
}

struct RunResult {
  int exit_code = exit_ok;
  fs::path directory;
  std::string message;
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::io: return exit_io;
    case ErrorKind::convergence:
    case ErrorKind::hermiticity: return exit_numerical;
    default: return exit_validation;
  }
}

/// Full run: validate, execute (fanning out sweep points over `jobs` threads),
/// stage results in a temporary directory and rename it into place.
inline RunResult run(const json& user_config, const std::string& outdir_flag = "", int jobs = 1) {
  RunResult res;
  std::optional<RunConfig> cfg;
  try {
    cfg.emplace(user_config);
  } catch (const Error& e) {
    return {exit_code_for(e.kind()), {}, e.what()};
  } catch (const json::exception& e) {
    return {exit_validation, {}, std::string("invalid-argument: ") + e.what()};
  }
  fs::path outdir = outdir_flag;
  if (outdir.empty()) outdir = cfg->resolved().at("outdir").get<std::string>();
  if (outdir.empty())
    if (const char* env = std::getenv("NCQM_OUTDIR")) outdir = env;
  if (outdir.empty()) outdir = "runs";

  const std::string base = cfg->experiment() + "-" + detail::timestamp();
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) return {exit_io, {}, "io: cannot create " + outdir.string() + ": " + ec.message()};
  const fs::path staging = outdir / (".staging-" + base + "-" + std::to_string(::getpid()));
  fs::remove_all(staging, ec);

  try {
    const json& sweep = cfg->resolved().at("sweep");
    if (sweep.is_null()) {
      const RunOutput out = execute(*cfg);
      if (out.numerical_failure) throw Error(ErrorKind::convergence, out.line);
      write_outputs(staging, out);
      res.message = out.line;
    } else {
      const std::string path = sweep.at("path").get<std::string>();
      const json values = sweep.at("values");
      std::vector<RunConfig> points;
      for (const auto& v : values) {
        json u = cfg->resolved();
        u["sweep"] = nullptr;
        apply_override(u, path + "=" + v.dump());
        points.emplace_back(u);
      }
      std::vector<RunOutput> outs(points.size());
      std::vector<std::string> errors(points.size());
      std::vector<int> codes(points.size(), exit_ok);
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
          try {
            outs[i] = execute(points[i]);
            if (outs[i].numerical_failure) codes[i] = exit_numerical;
          } catch (const Error& e) {
            errors[i] = e.what();
            codes[i] = exit_code_for(e.kind());
          } catch (const std::exception& e) {
            errors[i] = e.what();
            codes[i] = exit_numerical;
          }
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      json listing = json::array();
      for (std::size_t i = 0; i < points.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "point-%03zu", i);
        if (errors[i].empty()) write_outputs(staging / name, outs[i]);
        listing.push_back({{"directory", name}, {"value", values[i]}, {"exit_code", codes[i]},
                           {"error", errors[i]}, {"line", outs[i].line}});
        res.exit_code = std::max(res.exit_code, codes[i]);
      }
      RunOutput top;
      top.summary = {{"config", cfg->resolved()}, {"experiment", cfg->experiment()}, {"sweep", listing}};
      write_outputs(staging, top);
      res.message = cfg->experiment() + " sweep: " + std::to_string(points.size()) + " points";
      if (res.exit_code != exit_ok) throw Error(res.exit_code == exit_io ? ErrorKind::io : ErrorKind::convergence,
                                                "sweep point failed");
    }
    fs::path final_dir = outdir / base;
    for (int i = 1; fs::exists(final_dir); ++i) final_dir = outdir / (base + "-" + std::to_string(i));
    fs::rename(staging, final_dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot move results into " + final_dir.string() + ": " + ec.message());
    res.directory = final_dir;
    return res;
  } catch (const Error& e) {
    fs::remove_all(staging, ec);
    return {res.exit_code != exit_ok ? res.exit_code : exit_code_for(e.kind()), {}, e.what()};
  } catch (const json::exception& e) {
    fs::remove_all(staging, ec);
    return {exit_validation, {}, std::string("invalid-argument: ") + e.what()};
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    return {exit_io, {}, std::string("io: ") + e.what()};
  }
}

}  // namespace ncqm::cli
