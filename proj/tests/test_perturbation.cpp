#include <gtest/gtest.h>

#include <ncqm/perturbation.hpp>

using namespace ncqm;

namespace {

const double sqrt_pi = std::sqrt(pi);

PerturbationSetup setup(int n1, int n2, double theta, double alpha_c, double gamma, double omega = 1.0) {
  PerturbationSetup s;
  s.q = QuantumNumbers(n1, n2);
  s.omega = omega;
  s.theta = ThetaTensor(theta);
  s.alpha_c = alpha_c;
  s.gamma = gamma;
  return s;
}

}  // namespace

TEST(GaussHermite, RuleIntegratesMoments) {
  const auto r = gauss_hermite_rule(10);
  EXPECT_NEAR(r.weights.sum(), sqrt_pi, 1e-14);
  EXPECT_NEAR(r.weights.dot(r.nodes.cwiseAbs2()), sqrt_pi / 2, 1e-14);
  EXPECT_NEAR(r.weights.dot(r.nodes.array().pow(8).matrix()), 105.0 / 16 * sqrt_pi, 1e-12);
  EXPECT_THROW(gauss_hermite_rule(0), Error);
}

TEST(GaussHermite, HermiteNorm) {
  const auto v = gauss_hermite_integral({0, 2, 2, 0}, 4);
  EXPECT_NEAR(v.value, 8 * sqrt_pi, 1e-12);
  EXPECT_TRUE(v.exact);
}

TEST(GaussHermite, OddMomentsVanish) {
  for (int n = 0; n <= 5; ++n) EXPECT_NEAR(gauss_hermite_integral({3, n, n, 0}, n + 4).value, 0.0, 1e-10);
}

TEST(GaussHermite, QuarticMomentAtOne) {
  EXPECT_NEAR(gauss_hermite_integral({4, 1, 1, 0}, 5).value, 7.5 * sqrt_pi, 1e-12);
}

TEST(GaussHermite, FlagsInsufficientPoints) {
  EXPECT_FALSE(gauss_hermite_integral({4, 3, 3, 0}, 3).exact);
  EXPECT_TRUE(gauss_hermite_integral({4, 3, 3, 0}, 6).exact);
  EXPECT_THROW(gauss_hermite_integral({-1, 0, 0, 0}, 3), Error);
}

TEST(GaussHermite, SecondDerivativeOracle) {
  // int e^{-x^2/2} H0 d^2(e^{-x^2/2} H0) = -sqrt(pi)/2 ; at n = 1 it is -3 sqrt(pi)
  EXPECT_NEAR(gauss_hermite_integral({0, 0, 0, 2}, 4).value, -0.5 * sqrt_pi, 1e-13);
  EXPECT_NEAR(gauss_hermite_integral({0, 1, 1, 2}, 4).value, -3.0 * sqrt_pi, 1e-12);
}

TEST(GaussHermite, LargeOrderStaysFinite) {
  const auto v = gauss_hermite_integral({4, 20, 20, 0}, 26);
  EXPECT_TRUE(std::isfinite(v.value));
  const double h = sqrt_pi * std::pow(2.0, 20) * std::tgamma(21.0);
  EXPECT_NEAR(v.value / h, 0.75 * (2 * 400 + 2 * 20 + 1), 1e-8);
}

TEST(Identities, PatternOfAgreement) {
  const auto rep = verify_integral_identities(10);
  for (const char* id : {"orthogonality", "orthogonality_offdiag", "x_Hn_Hn+1", "x_Hn_Hn-1", "x2_Hn_Hn", "x2_Hn_Hn+2",
                         "x2_Hn_Hn-2", "x3_Hn2", "x3_Hn_Hn-1", "x4_Hn2"})
    EXPECT_TRUE(rep.at(id).all_agree()) << id;
  const auto d2 = rep.at("d2").mismatches();
  EXPECT_EQ(d2, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  const auto d4 = rep.at("d4").mismatches();
  EXPECT_EQ(d4, (std::vector<int>{1, 2, 3, 5, 6, 7, 8, 9, 10}));
}

TEST(Identities, D2AtZeroAndOne) {
  const auto rep = verify_integral_identities(1);
  const auto& d2 = rep.at("d2").entries;
  EXPECT_TRUE(d2[0].agree);
  EXPECT_NEAR(d2[0].paper, -0.5 * sqrt_pi, 1e-14);
  EXPECT_FALSE(d2[1].agree);
  EXPECT_NEAR(d2[1].paper, sqrt_pi, 1e-14);
  EXPECT_NEAR(d2[1].oracle, -3.0 * sqrt_pi, 1e-12);
  EXPECT_NEAR(d2[1].difference, 4.0 * sqrt_pi, 1e-12);
}

TEST(Identities, JsonCarriesAllValues) {
  const nlohmann::json j = verify_integral_identities(3);
  const std::string s = j.dump();
  for (const char* key : {"\"paper\"", "\"oracle\"", "\"difference\"", "\"relative_difference\"", "\"d4\""})
    EXPECT_NE(s.find(key), std::string::npos) << key;
  EXPECT_THROW(verify_integral_identities(21), Error);
}

TEST(FirstOrderShift, CommutativeQuarticGround) {
  const auto r = first_order_shift(setup(0, 0, 0.0, 0.0, 0.01));
  EXPECT_NEAR(r.shift, 0.015, 1e-8);
  EXPECT_TRUE(r.converged);
}

TEST(FirstOrderShift, CubicVanishes) {
  for (int n1 = 0; n1 <= 3; ++n1)
    for (int n2 = 0; n2 <= 3; ++n2)
      for (double th : {0.0, 0.3, 0.7})
        for (double w : {0.5, 1.0, 2.0}) EXPECT_NEAR(first_order_shift(setup(n1, n2, th, 0.4, 0.0, w)).shift, 0.0, 1e-10);
}

TEST(FirstOrderShift, LinearInGamma) {
  const auto a = first_order_shift(setup(1, 2, 0.3, 0.0, 0.01));
  const auto b = first_order_shift(setup(1, 2, 0.3, 0.0, 0.02));
  EXPECT_NEAR(b.shift, 2 * a.shift, 1e-10);
}

TEST(FirstOrderShift, BasisConvergence) {
  for (int n1 = 0; n1 <= 3; ++n1)
    for (int n2 = 0; n2 <= 3; ++n2) {
      const auto r = first_order_shift(setup(n1, n2, 0.5, 0.1, 0.01));
      EXPECT_LE(r.change_on_refinement, 1e-8);
      EXPECT_TRUE(r.converged);
    }
  EXPECT_THROW(first_order_shift(setup(3, 0, 0.0, 0.0, 0.01), 7), Error);
}

TEST(FirstOrderShift, AgreesWithGridState) {
  Grid2D g(64, 64, 8, 8);
  const auto s = setup(1, 0, 0.3, 0.0, 0.01);
  const double grid_value = first_order_shift_state(s, nc_ho_wavefunction(s.q, s.omega, s.theta, g));
  EXPECT_NEAR(grid_value, first_order_shift(s).shift, 1e-8);
}

TEST(PaperDeltaE, CommutativeGround) {
  EXPECT_NEAR(paper_delta_e(setup(0, 0, 0.0, 0.0, 0.01)), 0.015, 1e-15);
}

TEST(PaperDeltaE, AgreesAtThetaZero) {
  for (auto [n1, n2] : {std::pair{0, 0}, std::pair{1, 0}, std::pair{1, 1}}) {
    const auto s = setup(n1, n2, 0.0, 0.0, 0.01);
    EXPECT_NEAR(paper_delta_e(s), first_order_shift(s).shift, 1e-8) << n1 << "," << n2;
  }
}

TEST(PaperDeltaE, ReportedAtFiniteTheta) {
  const auto s = setup(0, 0, 0.3, 0.0, 0.01);
  const double paper = paper_delta_e(s), oracle = first_order_shift(s).shift;
  EXPECT_TRUE(std::isfinite(paper));
  EXPECT_NEAR(oracle, 0.0160199, 1e-6);
  // excited states carry the erroneous d2/d4 entries and disagree
  const auto e = setup(1, 1, 0.3, 0.0, 0.01);
  EXPECT_GT(std::abs(paper_delta_e(e) - first_order_shift(e).shift), 1e-6);
}

TEST(Setup, Validation) {
  EXPECT_THROW(paper_delta_e(setup(0, 0, 0.0, 0.0, -0.1)), Error);
  EXPECT_THROW(first_order_shift(setup(0, 0, 0.0, 0.0, 0.1, 0.0)), Error);
  EXPECT_THROW(QuantumNumbers(-1, 0), Error);
}

TEST(DenseSlope, MatchesOracle) {
  Grid2D g(40, 40, 7, 7);
  for (double th : {0.0, 0.3}) {
    const auto sl = dense_gamma_slope(1.0, ThetaTensor(th), g, 1e-3);
    const double oracle = first_order_shift(setup(0, 0, th, 0.0, 1.0)).shift;
    EXPECT_NEAR(sl.slope / oracle, 1.0, 1e-4) << th;
  }
}
