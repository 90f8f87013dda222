#include <gtest/gtest.h>

#include <ncqm/algebra.hpp>

using namespace ncqm;

namespace {

const Grid2D& grid64() {
  static const Grid2D g(64, 64, 8, 8);
  return g;
}

const std::vector<WaveFunction>& states() {
  static const auto s = random_test_states(grid64(), 5, 7);
  return s;
}

double residual(const WaveFunction& a, const WaveFunction& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(Generators, CommutativeLimitIsMultiplication) {
  Generators g(grid64(), {}, ThetaTensor(0.0));
  for (const auto& psi : states()) {
    const auto xpsi = WaveFunction::sample(grid64(), [&](double x, double y) {
      const int ix = int(std::lround((x + 8) / grid64().hx())), iy = int(std::lround((y + 8) / grid64().hy()));
      return x * psi(ix, iy);
    });
    EXPECT_EQ((g.x(0)(psi) - xpsi).amplitudes().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Generators, HamiltonianOnPlaneWave) {
  const Grid2D& grid = grid64();
  const double k = 3 * pi / grid.lx();
  auto pw = WaveFunction::sample(grid, [&](double x, double) { return std::exp(I * k * x); });
  Generators g(grid, PhysParams{2.0, 1.0}, ThetaTensor(0.3));
  const auto hpw = g.hamiltonian()(pw);
  EXPECT_LE((hpw - (k * k / 4.0) * pw).amplitudes().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Generators, PositionOnGaussian) {
  const Grid2D& grid = grid64();
  auto gauss = WaveFunction::sample(grid, [](double x, double y) { return std::exp(-(x * x + y * y) / 2); });
  // x1 g = x g - (i theta/2) dg/dy = (x + i theta y / 2) g
  auto expect = WaveFunction::sample(grid, [](double x, double y) {
    return (x + 0.25 * I * y) * std::exp(-(x * x + y * y) / 2);
  });
  Generators g(grid, {}, ThetaTensor(0.5));
  EXPECT_LE((g.x(0)(gauss) - expect).amplitudes().cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Generators, AllHermitian) {
  Generators g(grid64(), PhysParams{2.0, 0.7}, ThetaTensor(0.4), BoostContext{0.3, 1, 0});
  for (auto k : {GeneratorKind::position1, GeneratorKind::position2, GeneratorKind::momentum1, GeneratorKind::momentum2,
                 GeneratorKind::boost1, GeneratorKind::boost2, GeneratorKind::rotation, GeneratorKind::hamiltonian})
    EXPECT_TRUE(g.get(k).hermitian());
}

TEST(Generators, RejectsDirichlet) {
  Grid2D d(16, 16, 2, 2, Boundary::dirichlet);
  try {
    build_generator(GeneratorKind::momentum1, d, {}, ThetaTensor(0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported_boundary);
  }
}

TEST(Commutator, MomentaCommute) {
  Generators g(grid64(), {}, ThetaTensor(0.5));
  for (const auto& c : commutator(g.p(0), g.p(1), states()).action) EXPECT_LE(c.norm(), 1e-8);
}

TEST(Commutator, CanonicalPair) {
  Generators g(grid64(), {}, ThetaTensor(0.5));
  const auto r = commutator(g.x(0), g.p(0), states());
  for (std::size_t s = 0; s < states().size(); ++s) EXPECT_LE(residual(r.action[s], I * states()[s]), 1e-8);
}

TEST(Commutator, PositionsUnderBothConventions) {
  const double th = 0.5;
  Generators lit(grid64(), {}, ThetaTensor(th));
  Generators flip(grid64(), {}, ThetaTensor(th), {}, ThetaConvention::flipped);
  const auto a = commutator(lit.x(0), lit.x(1), states());
  const auto b = commutator(flip.x(0), flip.x(1), states());
  for (std::size_t s = 0; s < states().size(); ++s) {
    EXPECT_LE(residual(a.action[s], (-I * th) * states()[s]), 1e-8);
    EXPECT_LE(residual(b.action[s], (I * th) * states()[s]), 1e-8);
  }
}

TEST(Commutator, Antisymmetric) {
  Generators g(grid64(), {}, ThetaTensor(0.3), BoostContext{0.5, 1, 0});
  const auto ab = commutator(g.k(0), g.rotation(), states());
  const auto ba = commutator(g.rotation(), g.k(0), states());
  for (std::size_t s = 0; s < states().size(); ++s)
    EXPECT_EQ((ab.action[s] + ba.action[s]).amplitudes().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Commutator, ShapeMismatch) {
  Grid2D other(32, 32, 8, 8);
  try {
    commutator(build_generator(GeneratorKind::momentum1, other, {}, ThetaTensor()), Generators(grid64(), {}, ThetaTensor()).p(0),
               states());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Commutator, JacobiIdentity) {
  Generators g(grid64(), {}, ThetaTensor(0.4));
  const auto& a = g.x(0);
  const auto& b = g.x(1);
  const auto& c = g.p(0);
  for (const auto& psi : states()) {
    auto comm = [](const OperatorMatrix& u, const OperatorMatrix& v, const WaveFunction& f) {
      return u(v(f)) - v(u(f));
    };
    // [A,[B,C]] + [B,[C,A]] + [C,[A,B]]
    const auto bc = commutator_operator(b, c), ca = commutator_operator(c, a), ab = commutator_operator(a, b);
    const auto j = comm(a, bc, psi) + comm(b, ca, psi) + comm(c, ab, psi);
    EXPECT_LE(j.norm(), 1e-8);
  }
}

class AlgebraSuite : public ::testing::TestWithParam<std::tuple<double, double>> {};

TEST_P(AlgebraSuite, AllRelationsPass) {
  const auto [m, th] = GetParam();
  const auto rep = check_exotic_algebra(grid64(), PhysParams{m, 1.0}, ThetaTensor(th), BoostContext{0.25, 1, 0}, 1e-6);
  EXPECT_EQ(rep.relations.size(), 8u);
  for (const auto& r : rep.relations) EXPECT_TRUE(r.pass) << r.name << " residual " << r.residual;
  EXPECT_TRUE(rep.all_pass());
  EXPECT_NEAR(rep.boost_commutator_magnitude, m * m * th, 1e-6);
  EXPECT_EQ(rep.boost_commutator_sign, -1);
}

INSTANTIATE_TEST_SUITE_P(MassTheta, AlgebraSuite,
                         ::testing::Combine(::testing::Values(1.0, 2.0), ::testing::Values(0.0, 0.25, 0.5)));

TEST(Algebra, ThetaZeroBoostsCommute) {
  const auto rep = check_exotic_algebra(grid64(), {}, ThetaTensor(0.0), {}, 1e-6);
  EXPECT_LE(rep.at("[K_1,K_2]=+-i m^2 theta").residual, 1e-8);
  EXPECT_LE(rep.boost_commutator_magnitude, 1e-8);
}

TEST(Algebra, BoostCommutatorMagnitudeIsMSquaredTheta) {
  const auto rep = check_exotic_algebra(grid64(), PhysParams{2.0, 1.0}, ThetaTensor(0.5), {}, 1e-6);
  EXPECT_NEAR(rep.boost_commutator_magnitude, 2.0, 1e-6);
}

TEST(Algebra, FlippedConventionRecordsPositiveSign) {
  const auto rep = check_exotic_algebra(grid64(), {}, ThetaTensor(0.25), {}, 1e-6, 5, 1, ThetaConvention::flipped);
  EXPECT_EQ(rep.boost_commutator_sign, 1);
  EXPECT_TRUE(rep.all_pass());
}

TEST(Algebra, ThetaScaling) {
  for (double th : {0.1, 0.2, 0.4}) {
    const auto rep = check_exotic_algebra(grid64(), {}, ThetaTensor(th), {}, 1e-6);
    EXPECT_TRUE(rep.at("[K_1,K_2]=+-i m^2 theta").pass);
    EXPECT_NEAR(rep.boost_commutator_magnitude, th, 1e-6);
  }
}

TEST(Algebra, FailingRelationIsFlaggedNotThrown) {
  const auto rep = check_exotic_algebra(grid64(), {}, ThetaTensor(0.5), {}, 1e-30);
  EXPECT_FALSE(rep.all_pass());
  EXPECT_GE(rep.at("[x_i,p_j]=i hbar delta_ij").residual, 0.0);
}

TEST(Algebra, Preconditions) {
  EXPECT_THROW(check_exotic_algebra(grid64(), {}, ThetaTensor(0.5), {}, 0.0), Error);
  EXPECT_THROW(check_exotic_algebra(grid64(), {}, ThetaTensor(0.5), {}, 1e-6, 4), Error);
}

TEST(Algebra, ReportJson) {
  const auto rep = check_exotic_algebra(grid64(), {}, ThetaTensor(0.25), {}, 1e-6);
  const nlohmann::json j = rep;
  ASSERT_TRUE(j.contains("relations"));
  const auto& r0 = j["relations"][0];
  EXPECT_TRUE(r0.contains("name"));
  EXPECT_TRUE(r0.contains("residual"));
  EXPECT_TRUE(r0.contains("tolerance"));
  EXPECT_TRUE(r0.contains("pass"));
}

TEST(Boost, AlongX) {
  Generators g(grid64(), {}, ThetaTensor(0.3), BoostContext{0.5, 1, 0});
  EXPECT_LE(boost_derivative_check(g, states()).max_residual(), 1e-8);
}

TEST(Boost, ZeroVelocity) {
  Generators g(grid64(), {}, ThetaTensor(0.3), BoostContext{0.5, 0, 0});
  EXPECT_EQ(boost_derivative_check(g, states()).max_residual(), 0.0);
}

TEST(Boost, ObliqueVelocityHeavyMass) {
  Generators g(grid64(), PhysParams{2.0, 1.0}, ThetaTensor(0.3), BoostContext{0.2, 0.3, -0.7});
  EXPECT_LE(boost_derivative_check(g, states()).max_residual(), 1e-8);
  // explicit p2 component: (-i/hbar)[v.K, p2] psi = m v2 psi = -1.4 psi
  const auto vk = 0.3 * g.k(0) + (-0.7) * g.k(1);
  for (const auto& psi : states()) {
    const auto c = (-I) * (vk(g.p(1)(psi)) - g.p(1)(vk(psi)));
    EXPECT_LE(residual(c, -1.4 * psi), 1e-8);
  }
}

TEST(Casimir, FreeInternalEnergyVanishes) {
  Generators g(grid64(), {}, ThetaTensor(0.5), BoostContext{0.3, 1, 0});
  const auto c = casimir_invariants(g, 1e-6, states());
  for (const auto& psi : states()) EXPECT_LE(c.i1(psi).norm(), 1e-12);
}

TEST(Casimir, CommuteWithAllGenerators) {
  Generators g(grid64(), PhysParams{2.0, 1.0}, ThetaTensor(0.25), BoostContext{0.3, 1, 0});
  const auto c = casimir_invariants(g, 1e-6, states());
  EXPECT_EQ(c.report.relations.size(), 16u);
  for (const auto& r : c.report.relations) EXPECT_TRUE(r.pass) << r.name << " " << r.residual;
  EXPECT_TRUE(c.report.at("[I2,p1]=0").pass);
  EXPECT_TRUE(c.report.at("[I2,K1]=0").pass);
}

TEST(Moyal, CoordinateCommutator) {
  for (double th : {0.0, 0.3, -1.25}) {
    const auto x = PolynomialPotential::monomial(1, 0), y = PolynomialPotential::monomial(0, 1);
    const auto c = moyal_star(x, y, ThetaTensor(th), 4).value - moyal_star(y, x, ThetaTensor(th), 4).value;
    PolynomialPotential expect;
    if (th != 0.0) expect.add(0, 0, I * th);
    EXPECT_EQ(c, expect);
  }
}

TEST(Moyal, CommutativeLimitIsPointwise) {
  for (int a1 = 0; a1 <= 4; ++a1)
    for (int b1 = 0; a1 + b1 <= 4; ++b1)
      for (int a2 = 0; a2 <= 4; ++a2)
        for (int b2 = 0; a2 + b2 <= 4; ++b2) {
          const auto f = PolynomialPotential::monomial(a1, b1), g = PolynomialPotential::monomial(a2, b2);
          const auto s = moyal_star(f, g, ThetaTensor(0.0), 8);
          EXPECT_EQ(s.value, f * g);
          EXPECT_FALSE(s.truncated);
        }
}

TEST(Moyal, SquaresAgainstHandExpansion) {
  // x^2 * y^2 = x^2 y^2 + 2 i theta x y - theta^2 / 2
  const double th = 0.7;
  const auto s = moyal_star(PolynomialPotential::monomial(2, 0), PolynomialPotential::monomial(0, 2), ThetaTensor(th), 4);
  PolynomialPotential expect;
  expect.add(2, 2, 1.0);
  expect.add(1, 1, 2.0 * I * th);
  expect.add(0, 0, -th * th / 2);
  EXPECT_LE(s.value.max_abs_diff(expect), 1e-15);
}

TEST(Moyal, Associative) {
  const ThetaTensor th(0.6);
  const auto f = PolynomialPotential::monomial(2, 1) + PolynomialPotential::monomial(0, 1, 0.5);
  const auto g = PolynomialPotential::monomial(1, 2) - PolynomialPotential::monomial(1, 0);
  const auto h = PolynomialPotential::monomial(3, 0) + PolynomialPotential::monomial(0, 2, I);
  const auto lhs = moyal_star(moyal_star(f, g, th, 12).value, h, th, 12).value;
  const auto rhs = moyal_star(f, moyal_star(g, h, th, 12).value, th, 12).value;
  EXPECT_LE(lhs.max_abs_diff(rhs), 1e-12);
}

TEST(Moyal, TruncationFlag) {
  const auto f = PolynomialPotential::monomial(3, 0), g = PolynomialPotential::monomial(0, 3);
  const auto s = moyal_star(f, g, ThetaTensor(0.5), 2);
  EXPECT_TRUE(s.truncated);
  EXPECT_FALSE(moyal_star(f, g, ThetaTensor(0.5), 3).truncated);
  EXPECT_THROW(moyal_star(f, g, ThetaTensor(0.5), -1), Error);
}
