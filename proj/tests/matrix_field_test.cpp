#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "nlgpe/matrix_field.hpp"
#include "oracles.hpp"

using namespace nlgpe;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd B(2, 2);
  B << a, b, c, d;
  return B;
}

}  // namespace

TEST(CheckCooperative, Examples) {
  EXPECT_TRUE(check_cooperative(mat2(-1, 2, 3, -4)));
  EXPECT_FALSE(check_cooperative(mat2(5, -0.1, 0, 1)));
  EXPECT_TRUE(check_cooperative(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(CheckIrreducible, Examples) {
  EXPECT_TRUE(check_irreducible(mat2(0, 1, 1, 0)));
  EXPECT_FALSE(check_irreducible(mat2(1, 1, 0, 1)));
  EXPECT_FALSE(check_irreducible(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix()));
  EXPECT_TRUE(check_irreducible(Eigen::MatrixXd::Constant(1, 1, -2.0)));
  Eigen::MatrixXd cycle = Eigen::MatrixXd::Zero(3, 3);
  cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = 1.0;
  EXPECT_TRUE(check_irreducible(cycle));
  cycle(2, 0) = 1e-15;
  EXPECT_FALSE(check_irreducible(cycle));
}

TEST(SpectralBound, ClosedForms) {
  EXPECT_NEAR(spectral_bound(mat2(1, 2, 3, 0)), 3.0, 1e-12);
  EXPECT_NEAR(spectral_bound(mat2(0, 1, 1, 0)), 1.0, 1e-12);
  EXPECT_THROW(spectral_bound(mat2(0, -1, 1, 0)), std::invalid_argument);
}

TEST(SpectralBound, EigenvectorIsNonnegativePerronVector) {
  Eigen::VectorXd v;
  const double s = spectral_bound(mat2(1, 2, 3, 0), &v);
  ASSERT_EQ(v.size(), 2);
  EXPECT_GE(v.minCoeff(), 0.0);
  EXPECT_NEAR(v.maxCoeff(), 1.0, 1e-12);
  EXPECT_LT((mat2(1, 2, 3, 0) * v - s * v).cwiseAbs().maxCoeff(), 1e-10);
  // PF vector of [[1,2],[3,0]] for eigenvalue 3 is (1, 1).
  EXPECT_NEAR(v[0], 1.0, 1e-10);
  EXPECT_NEAR(v[1], 1.0, 1e-10);
}

TEST(SpectralBound, RandomFiveByFiveAgainstDenseOracle) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd B = oracle::random_cooperative(rng, 5);
  EXPECT_NEAR(spectral_bound(B), oracle::max_real_eig(B), 1e-10);
}

TEST(SpectralBound, ThousandRandomMatricesAgainstDense) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int t = 0; t < 1000; ++t) {
    const int n = dim(rng);
    const Eigen::MatrixXd B = oracle::random_cooperative(rng, n, t % 3 == 0 ? 0.6 : 0.0);
    const double oracle_value = oracle::max_real_eig(B);
    ASSERT_NEAR(spectral_bound(B), oracle_value, 1e-9 * std::max(1.0, std::abs(oracle_value))) << "trial " << t << "\n" << B;
  }
}

TEST(SpectralBound, ShiftCovariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd B = oracle::random_cooperative(rng, 4);
    const double s = shift(rng);
    const Eigen::MatrixXd Bs = B + s * Eigen::MatrixXd::Identity(4, 4);
    EXPECT_NEAR(spectral_bound(Bs), spectral_bound(B) + s, 1e-12 * std::max(1.0, std::abs(spectral_bound(Bs))) + 1e-12);
  }
}

TEST(SpectralBound, MonotoneInEntries) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> bump(0.0, 0.5);
  for (int t = 0; t < 300; ++t) {
    const Eigen::MatrixXd B = oracle::random_cooperative(rng, 5, 0.3);
    Eigen::MatrixXd C = B;
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index k = 0; k < 5; ++k) {
        C(i, k) += bump(rng);
      }
    }
    EXPECT_LE(spectral_bound(B), spectral_bound(C) + 1e-10);
  }
}

TEST(SampleField, ConstantField) {
  const SpatialGrid g = build_grid(0.0, 1.0, 25);
  const SpectralBoundField sb = sample_field(MatrixField::constant(g, mat2(1, 2, 3, 0)), g);
  EXPECT_NEAR(sb.eta, 3.0, 1e-12);
  EXPECT_LT((sb.values.array() - 3.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(sb.irreducible_nodes, 25u);
  EXPECT_TRUE(sb.warning.empty());
}

TEST(SampleField, ScalarField) {
  const SpatialGrid g = build_grid(0.0, 1.0, 100);
  const MatrixField f = MatrixField::from_function(g, 1, [](double x) { return Eigen::MatrixXd::Constant(1, 1, -x); });
  const SpectralBoundField sb = sample_field(f, g);
  EXPECT_NEAR(sb.eta, -0.005, 1e-15);
  EXPECT_EQ(sb.argmax, 0u);
  for (std::size_t m = 0; m < g.size(); ++m) {
    EXPECT_DOUBLE_EQ(sb.values[m], -g.nodes[m]);
  }
}

TEST(SampleField, SineFieldAgainstAnalyticMax) {
  const SpatialGrid g = build_grid(0.0, 1.0, 200);
  const MatrixField f =
      MatrixField::from_function(g, 2, [](double x) { return mat2(std::sin(std::numbers::pi * x), 1, 1, 0); });
  const SpectralBoundField sb = sample_field(f, g);
  const double analytic = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(sb.eta, analytic, 1e-3);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double s = std::sin(std::numbers::pi * g.nodes[m]);
    EXPECT_NEAR(sb.values[m], (s + std::sqrt(s * s + 4.0)) / 2.0, 1e-12);
  }
}

TEST(SampleField, ErrorsAndWarnings) {
  const SpatialGrid g = build_grid(0.0, 1.0, 10);
  EXPECT_THROW(sample_field(MatrixField::constant(g, mat2(0, -1, 1, 0)), g), std::invalid_argument);
  const SpectralBoundField sb = sample_field(MatrixField::constant(g, mat2(1, 0, 0, 2)), g);
  EXPECT_EQ(sb.irreducible_nodes, 0u);
  EXPECT_FALSE(sb.warning.empty());
  EXPECT_NEAR(sb.eta, 2.0, 1e-12);
}

TEST(L1Divergence, ConstantFieldSitsAtCap) {
  for (std::size_t M : {50u, 100u, 200u}) {
    const SpatialGrid g = build_grid(0.0, 1.0, M);
    const SpectralBoundField sb = sample_field(MatrixField::constant(g, mat2(1, 2, 3, 0)), g);
    EXPECT_NEAR(l1_divergence_indicator(sb, g), static_cast<double>(M), 1e-6 * M);
  }
}

TEST(L1Divergence, QuadraticPeakGrowsLikeInverseRoot) {
  auto fn = [](double x) { return Eigen::MatrixXd::Constant(1, 1, 1.0 - (x - 0.5) * (x - 0.5)); };
  const std::vector<std::size_t> res = {64, 128, 256, 512, 1024};
  const DivergenceCurve c = l1_divergence_curve(0.0, 1.0, 1, fn, res);
  EXPECT_TRUE(c.growing);
  // Partial integral ∫ dx/(x² + δ) = π/√δ for δ = h, up to O(1).
  for (std::size_t k = 0; k < res.size(); ++k) {
    const double h = 1.0 / static_cast<double>(res[k]);
    EXPECT_NEAR(c.values[k] * std::sqrt(h), std::numbers::pi, 0.5);
  }
}

TEST(L1Divergence, AbsolutePeakGrowsLogarithmically) {
  auto fn = [](double x) { return Eigen::MatrixXd::Constant(1, 1, -std::abs(x - 0.5)); };
  const std::vector<std::size_t> res = {64, 128, 256, 512, 1024};
  const DivergenceCurve c = l1_divergence_curve(0.0, 1.0, 1, fn, res);
  EXPECT_TRUE(c.growing);
  // Each doubling adds about 2·log 2.
  for (std::size_t k = 1; k < res.size(); ++k) {
    EXPECT_NEAR(c.values[k] - c.values[k - 1], 2.0 * std::log(2.0), 0.15);
  }
}

TEST(L1Divergence, IntegrableGapIsNotGrowing) {
  // η − s ≡ 1 away from a single node: integrand bounded, curve flattens.
  auto fn = [](double x) { return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::abs(x - 0.5)) * -1.0); };
  const DivergenceCurve c = l1_divergence_curve(0.0, 1.0, 1, fn, {64, 128, 256, 512, 1024});
  EXPECT_FALSE(c.growing);
}

TEST(MatrixFieldOps, LipschitzAndShift) {
  const SpatialGrid g = build_grid(0.0, 1.0, 100);
  const MatrixField f = MatrixField::from_function(g, 2, [](double x) { return mat2(3 * x, 1, 1, 0); });
  EXPECT_NEAR(f.lipschitz_estimate(), 3.0, 1e-9);
  const MatrixField s = f.shifted(0.5);
  EXPECT_NEAR(s[7](0, 0) - f[7](0, 0), 0.5, 1e-15);
  EXPECT_EQ(s[7](0, 1), f[7](0, 1));
}

TEST(LinearizationField, SubtractsBoundaryWeight) {
  const SpatialGrid g = build_grid(0.0, 1.0, 40);
  const auto blocks = bind_dispersal(std::vector<Dispersal>{{KernelSpec::gaussian(0.1), {Boundary::dirichlet, 2.0}},
                                                            {KernelSpec::gaussian(0.1), {Boundary::neumann, 0.0}}},
                                     g);
  const MatrixField a = MatrixField::constant(g, mat2(1, 2, 3, 4));
  const MatrixField B = linearization_field(a, blocks);
  EXPECT_DOUBLE_EQ(B[5](0, 0), -1.0);
  EXPECT_DOUBLE_EQ(B[5](1, 1), 4.0);
  EXPECT_DOUBLE_EQ(B[5](0, 1), 2.0);
}

TEST(FieldTable, LoadsEntries) {
  const SpatialGrid g = build_grid(0.0, 1.0, 3);
  std::stringstream in("node_index,i,k,value\n0,0,0,-1\n2,0,1,0.5\n2,1,0,2\n");
  const MatrixField f = load_field_table(in, g, 2);
  EXPECT_DOUBLE_EQ(f[0](0, 0), -1.0);
  EXPECT_DOUBLE_EQ(f[2](0, 1), 0.5);
  EXPECT_DOUBLE_EQ(f[2](1, 0), 2.0);
  EXPECT_DOUBLE_EQ(f[1](1, 1), 0.0);
  std::stringstream bad("node_index,i,k,value\n3,0,0,1\n");
  EXPECT_THROW(load_field_table(bad, g, 2), std::invalid_argument);
}
