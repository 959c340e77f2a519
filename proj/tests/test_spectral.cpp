#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "krsbm/spectral.hpp"
#include "test_util.hpp"

using namespace krsbm;
using krsbm::testing::max_abs;
using krsbm::testing::max_abs_diff;
using krsbm::testing::random_field;

namespace {

DualIndex mode(const LatticeSpec& s, Flavor f, int m0, int m1 = 0) {
  DualIndex k;
  k.m = {m0, m1};
  k.N = s.N();
  k.d = s.d;
  k.flavor = f;
  return k;
}

std::vector<DualIndex> all_modes(const LatticeSpec& s, Flavor f) {
  SpectrumCoeffs c{s, f, std::vector<double>(mode_count(s, f))};
  std::vector<DualIndex> out;
  for (std::size_t j = 0; j < c.size(); ++j) out.push_back(c.mode(j));
  return out;
}

// Inner product on Λ_n computed the long way: average the product of the
// reflected extensions over the full torus.
double torus_inner(const Field& u, const Field& v, Flavor f) {
  const TorusField a = f == Flavor::dirichlet ? odd_extension(u) : even_extension(u);
  const TorusField b = f == Flavor::dirichlet ? odd_extension(v) : even_extension(v);
  double acc = 0.0;
  for (std::size_t t = 0; t < a.values.size(); ++t) acc += a.values[t] * b.values[t];
  return acc / std::pow(double(u.spec.n), u.spec.d) / double(1 << u.spec.d);
}

// Dense basis matrix (sites × modes).
Eigen::MatrixXd basis_matrix(const LatticeSpec& s, Flavor f) {
  const auto modes = all_modes(s, f);
  Eigen::MatrixXd B(s.size(), modes.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < modes.size(); ++j) B(i, j) = basis_eval(modes[j], s, s.site(i));
  return B;
}

Eigen::VectorXd trapezoid_weights(const LatticeSpec& s) {
  Eigen::VectorXd w(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    w(i) = double(reflection_multiplicity(s, s.site(i))) / (1 << s.d) / std::pow(double(s.n), s.d);
  return w;
}

}  // namespace

TEST(Basis, DirichletFormulaValue) {
  LatticeSpec s(1, 2, 1, false);
  EXPECT_NEAR(dirichlet_basis_eval(mode(s, Flavor::dirichlet, 1), s, {1, 0}), 1.0, 1e-15);
}

TEST(Basis, DirichletVanishesOnBoundary) {
  LatticeSpec s(3, 2, 2);
  for (const DualIndex& k : all_modes(s, Flavor::dirichlet))
    for (const Site& x : boundary_sites(s)) EXPECT_NEAR(dirichlet_basis_eval(k, s, x), 0.0, 1e-14);
}

TEST(Basis, DirichletRejectsBoundaryFrequencies) {
  LatticeSpec s(2, 2, 2);
  EXPECT_THROW(dirichlet_basis_eval(mode(s, Flavor::dirichlet, 0, 1), s, {1, 1}), std::invalid_argument);
  EXPECT_THROW(dirichlet_basis_eval(mode(s, Flavor::dirichlet, 1, s.M()), s, {1, 1}), std::invalid_argument);
}

TEST(Basis, NeumannZeroModeIsNormalisedConstant) {
  for (int d : {1, 2}) {
    LatticeSpec s(4, 2, d);
    const Field f = basis_field(mode(s, Flavor::neumann, 0, 0), s);
    const double expect = std::pow(double(s.N()), -0.5 * d) * std::pow(std::numbers::sqrt2, d);
    for (double v : f.values) EXPECT_NEAR(v, expect, 1e-15);
  }
}

TEST(Basis, NeumannEvenExtensionHasSymmetricBoundaryDifference) {
  LatticeSpec s(4, 2, 1);
  const Field f = basis_field(mode(s, Flavor::neumann, 3), s);
  const TorusField e = even_extension(f);
  EXPECT_DOUBLE_EQ(e.at({1, 0}) - e.at({0, 0}), e.at({-1, 0}) - e.at({0, 0}));
  EXPECT_DOUBLE_EQ(e.at({s.M() + 1, 0}), e.at({s.M() - 1, 0}));
}

TEST(Basis, DirichletSelfInnerProductIsOne) {
  LatticeSpec s(4, 2, 1);
  for (const DualIndex& k : all_modes(s, Flavor::dirichlet)) {
    const Field f = basis_field(k, s);
    EXPECT_NEAR(torus_inner(f, f, Flavor::dirichlet), 1.0, 1e-12);
  }
}

class GramTest : public ::testing::TestWithParam<std::tuple<int, int, Flavor>> {};

TEST_P(GramTest, OrthonormalUnderNormalisedMeasure) {
  const auto [n, d, f] = GetParam();
  LatticeSpec s(n, 2, d);
  const Eigen::MatrixXd B = basis_matrix(s, f);
  const Eigen::MatrixXd G = B.transpose() * trapezoid_weights(s).asDiagonal() * B;
  EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Dense, GramTest,
                         ::testing::Combine(::testing::Values(1, 4, 8), ::testing::Values(1, 2),
                                            ::testing::Values(Flavor::dirichlet, Flavor::neumann)));

TEST(Transform, BasisFunctionMapsToIndicator) {
  for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
    LatticeSpec s(4, 2, 2);
    const DualIndex k = mode(s, f, 2, 5);
    const SpectrumCoeffs c = forward_transform(basis_field(k, s), f);
    for (std::size_t j = 0; j < c.size(); ++j)
      EXPECT_NEAR(c.coeffs[j], j == c.position(k.m) ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Transform, ZeroFieldHasZeroCoefficients) {
  LatticeSpec s(4, 2, 2);
  for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
    const SpectrumCoeffs c = forward_transform(Field(s), f);
    EXPECT_EQ(max_abs(c.coeffs), 0.0);
    EXPECT_EQ(max_abs(inverse_transform(c).values), 0.0);
  }
}

TEST(Transform, MatchesDenseGramSolve) {
  for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
    LatticeSpec s(4, 2, 2);
    const Field u = random_field(s, 11, f == Flavor::dirichlet);
    const Eigen::MatrixXd B = basis_matrix(s, f);
    const Eigen::VectorXd w = trapezoid_weights(s);
    const Eigen::VectorXd uv = Eigen::Map<const Eigen::VectorXd>(u.values.data(), u.size());
    const Eigen::MatrixXd G = B.transpose() * w.asDiagonal() * B;
    const Eigen::VectorXd oracle = G.ldlt().solve(B.transpose() * w.asDiagonal() * uv);
    const SpectrumCoeffs c = forward_transform(u, f);
    ASSERT_EQ(c.size(), std::size_t(oracle.size()));
    for (std::size_t j = 0; j < c.size(); ++j) EXPECT_NEAR(c.coeffs[j], oracle(j), 1e-10);
    // Synthesis against the dense basis.
    const Eigen::VectorXd back = B * oracle;
    const Field inv = inverse_transform(c);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(inv.values[i], back(i), 1e-10);
  }
}

TEST(Transform, RoundTripProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + int(rng() % 12), d = 1 + int(rng() % 2), L = 2 * (1 + int(rng() % 2));
    LatticeSpec s(n, L, d);
    for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
      const Field u = random_field(s, rng(), f == Flavor::dirichlet);
      const Field back = inverse_transform(forward_transform(u, f));
      EXPECT_LT(max_abs_diff(back.values, u.values), 1e-12 * std::max(1.0, max_abs(u.values)));
    }
  }
}

TEST(Multiplier, IdentitySymbol) {
  LatticeSpec s(4, 2, 2);
  const MultiplierSpec one{[](const DualIndex&) { return 1.0; }, "one"};
  for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
    const Field u = random_field(s, 2, f == Flavor::dirichlet);
    EXPECT_LT(max_abs_diff(fourier_multiplier(one, u, f).values, u.values), 1e-12);
  }
}

TEST(Multiplier, RejectsOddSymbol) {
  LatticeSpec s(4, 2, 1);
  const MultiplierSpec odd{[](const DualIndex& k) { return k.k(0); }, "odd"};
  EXPECT_THROW(fourier_multiplier(odd, random_field(s, 1), Flavor::neumann), std::invalid_argument);
}

TEST(Multiplier, LaplacianSymbolReproducesStencil) {
  for (int d : {1, 2})
    for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
      LatticeSpec s(4, 2, d);
      const Field u = random_field(s, 3 + d, f == Flavor::dirichlet);
      const Field a = apply_laplacian(u, f);
      const Field b = fourier_multiplier(laplacian_multiplier(s), u, f);
      EXPECT_LT(max_abs_diff(a.values, b.values), 1e-10 * max_abs(a.values));
    }
}

TEST(Multiplier, CutoffKillsNeumannZeroMode) {
  LatticeSpec s(4, 2, 2);
  const Field c = fourier_multiplier(smooth_cutoff(), Field(s, 3.0), Flavor::neumann);
  EXPECT_LT(max_abs(c.values), 1e-12);
}

TEST(Multiplier, CommutesWithExtensionsForRandomEvenSymbols) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    const MultiplierSpec sigma{[a, b, c](const DualIndex& k) {
                                 double s = a;
                                 for (int i = 0; i < k.d; ++i) s += b * std::cos(2 * std::numbers::pi * k.k(i) / 3.0) + c * k.k(i) * k.k(i);
                                 return s;
                               },
                               "random-even"};
    for (int d : {1, 2}) {
      LatticeSpec s(3, 2, d);
      const Field u = random_field(s, rng());
      for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
        const TorusField lhs = f == Flavor::dirichlet ? odd_extension(fourier_multiplier(sigma, u, f))
                                                      : even_extension(fourier_multiplier(sigma, u, f));
        const TorusField rhs = periodic_multiplier(sigma, f == Flavor::dirichlet ? odd_extension(u) : even_extension(u));
        EXPECT_LT(max_abs_diff(lhs.values, rhs.values), 1e-10);
      }
    }
  }
}

TEST(Laplacian, SymbolEdgeValues) {
  LatticeSpec s(8, 2, 2);
  EXPECT_EQ(laplacian_symbol(mode(s, Flavor::neumann, 0, 0), s), 0.0);
  // Nyquist component contributes −4n².
  EXPECT_NEAR(laplacian_symbol(mode(s, Flavor::neumann, s.M(), 0), s), -4.0 * 64, 1e-9);
  EXPECT_NEAR(laplacian_symbol(mode(s, Flavor::neumann, s.M(), s.M()), s), -8.0 * 64, 1e-9);
}

TEST(Laplacian, SymbolSmallFrequencyAsymptotics) {
  LatticeSpec s(64, 8, 2);
  for (int m = 1; m < s.M(); ++m) {
    const DualIndex k = mode(s, Flavor::neumann, m, m / 2);
    if (k.norm() / s.n > 0.05) break;
    const double cont = -4.0 * std::numbers::pi * std::numbers::pi * k.norm() * k.norm();
    EXPECT_LT(std::abs(laplacian_symbol(k, s) - cont), 0.05 * std::abs(cont));
  }
}

TEST(Laplacian, EvenAndNonPositive) {
  LatticeSpec s(5, 2, 2);
  for (int a = -s.M() + 1; a <= s.M(); ++a)
    for (int b = -s.M() + 1; b <= s.M(); ++b) {
      const DualIndex k = mode(s, Flavor::periodic, a, b), kr = mode(s, Flavor::periodic, -a, b);
      const double v = laplacian_symbol(k, s);
      EXPECT_LE(v, 0.0);
      EXPECT_DOUBLE_EQ(v, laplacian_symbol(kr, s));
      if (a != 0 || b != 0) {
        EXPECT_LT(v, 0.0);
      }
    }
}

TEST(Laplacian, ConstantNeumannIsHarmonic) {
  LatticeSpec s(4, 2, 2);
  EXPECT_LT(max_abs(apply_laplacian(Field(s, 2.5), Flavor::neumann).values), 1e-12);
}

TEST(Laplacian, EigenRelationOnBasis) {
  for (Flavor f : {Flavor::dirichlet, Flavor::neumann}) {
    LatticeSpec s(8, 2, 2);
    for (const DualIndex& k : {mode(s, f, 1, 1), mode(s, f, 3, 7), mode(s, f, 15, 2)}) {
      const Field b = basis_field(k, s);
      const Field lb = apply_laplacian(b, f);
      const double lam = laplacian_symbol(k, s);
      for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(lb.values[i], lam * b.values[i], 1e-10 * std::abs(lam));
    }
  }
}

TEST(Laplacian, DirichletStencilVanishesOnBoundary) {
  LatticeSpec s(4, 2, 2);
  EXPECT_TRUE(vanishes_on_boundary(apply_laplacian(random_field(s, 8), Flavor::dirichlet)));
}

TEST(Renormalization, ZeroCutoffGivesZero) {
  const MultiplierSpec zero{[](const DualIndex&) { return 0.0; }, "zero"};
  EXPECT_EQ(renormalization_constant(LatticeSpec(8, 2, 2), zero), 0.0);
}

TEST(Renormalization, RejectsOneDimension) {
  EXPECT_THROW(renormalization_constant(LatticeSpec(8, 2, 1), smooth_cutoff()), std::invalid_argument);
}

TEST(Renormalization, RejectsCutoffNotVanishingAtZero) {
  const MultiplierSpec one{[](const DualIndex&) { return 1.0; }, "one"};
  EXPECT_THROW(renormalization_constant(LatticeSpec(4, 2, 2), one), std::invalid_argument);
}

TEST(Renormalization, MatchesDirectDoubleSum) {
  LatticeSpec s(16, 2, 2);
  const auto chi = smooth_cutoff();
  double acc = 0.0;
  const double N = s.N();
  for (int a = -s.M() + 1; a <= s.M(); ++a)
    for (int b = -s.M() + 1; b <= s.M(); ++b) {
      const double k1 = a / N, k2 = b / N;
      const double r = std::hypot(k1, k2);
      const double c = smootherstep((r - 0.25) / 0.25);
      if (c == 0.0) continue;
      const double lt = 2 * 256.0 * (2.0 - std::cos(2 * std::numbers::pi * k1 / 16) - std::cos(2 * std::numbers::pi * k2 / 16));
      acc += c / lt;
    }
  EXPECT_NEAR(renormalization_constant(s, chi), acc / (N * N), 1e-12);
}

TEST(Renormalization, LogarithmicGrowthAndWeakBoxDependence) {
  const auto chi = smooth_cutoff();
  std::vector<double> kappa;
  for (int n : {16, 32, 64, 128}) kappa.push_back(renormalization_constant(LatticeSpec(n, 2, 2), chi));
  for (double k : kappa) EXPECT_GT(k, 0.0);
  std::vector<double> diff;
  for (std::size_t i = 1; i < kappa.size(); ++i) diff.push_back(kappa[i] - kappa[i - 1]);
  for (double d : diff) {
    EXPECT_GT(d, 0.0);
    // ∫ dk / (4π²|k|²) over an annulus of ratio 2 in the plane.
    EXPECT_NEAR(d, std::log(2.0) / (2 * std::numbers::pi), 0.1 * d);
  }
  for (int n : {16, 32, 64}) {
    const double k2 = renormalization_constant(LatticeSpec(n, 2, 2), chi);
    const double k4 = renormalization_constant(LatticeSpec(n, 4, 2), chi);
    EXPECT_LE(std::abs(k2 - k4), 5.0 / 4.0);
  }
}
