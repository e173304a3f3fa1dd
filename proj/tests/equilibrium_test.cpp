#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "nlgpe/dynamics.hpp"
#include "nlgpe/equilibrium.hpp"
#include "nlgpe/models.hpp"

using namespace nlgpe;

namespace {

Dispersal neumann(double w, double d) { return {KernelSpec::gaussian(w), {Boundary::neumann, d}}; }

ModelSpec unit_logistic(std::size_t M = 60) {
  const SpatialGrid g = build_grid(0.0, 1.0, M);
  return logistic(g, coefficient(g, 1.0), neumann(0.1, 1.0));
}

// Pointwise reaction with no dispersal; used for hand-made nonlinearities.
ModelSpec scalar_model(std::size_t M, std::function<double(double)> f, std::function<double(double)> df) {
  ModelSpec model;
  model.name = "custom";
  model.n = 1;
  model.grid = build_grid(0.0, 1.0, M);
  model.dispersal = {neumann(0.1, 0.0)};
  model.f = [f](std::size_t, std::span<const double> u, std::span<double> out) { out[0] = f(u[0]); };
  model.jac = [df](std::size_t, std::span<const double> u, Eigen::Ref<Eigen::MatrixXd> J) { J(0, 0) = df(u[0]); };
  finalize(model);
  return model;
}

WnvReduction wnv_constant_reduction(std::size_t M, double l) {
  const SpatialGrid g = build_grid(0.0, 1.0, M);
  const WnvParams p = WnvParams::constant(g, 1, 1, 0, 0, 1, 1, l, l, neumann(0.1, 1.0), neumann(0.15, 0.5));
  return wnv_reduce(g, p, coefficient(g, 1.0), coefficient(g, 1.0));
}

}  // namespace

TEST(Residual, LogisticExamples) {
  const ModelSpec m = unit_logistic();
  EXPECT_LT(residual(m, State::Ones(60, 1)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(residual(m, State::Zero(60, 1)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((residual(m, State::Constant(60, 1, 2.0)).array() + 2.0).abs().maxCoeff(), 1e-10);
}

TEST(MonotoneIterate, LogisticFromWideBracket) {
  const ModelSpec m = unit_logistic();
  const EquilibriumResult r = monotone_iterate(m, {State::Constant(60, 1, 0.1), State::Constant(60, 1, 5.0)});
  EXPECT_LT((r.U.array() - 1.0).abs().maxCoeff(), 1e-8);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_LT(r.bracket_gap, 1e-10);
}

TEST(MonotoneIterate, HeterogeneousLogisticIsFixedPointOfFlow) {
  const SpatialGrid g = build_grid(0.0, 1.0, 50);
  const ModelSpec m = logistic(g, coefficient(g, [](double x) { return 1.0 + x; }), neumann(0.1, 0.6));
  MonotoneOptions opts;
  opts.tol = 1e-11;
  const State U = solve_logistic_equilibrium(m, 1e-3, opts);
  EXPECT_LT(residual(m, U).cwiseAbs().maxCoeff(), 1e-9);
  const Trajectory tr = integrate(m, U, 10.0, 0.05, 100);
  EXPECT_LT((tr.final_state() - U).cwiseAbs().maxCoeff(), 10 * 1e-8);
}

TEST(MonotoneIterate, IteratesStayOrdered) {
  const SpatialGrid g = build_grid(0.0, 1.0, 40);
  const ModelSpec m = logistic(g, coefficient(g, [](double x) { return 2.0 - x; }), neumann(0.1, 1.0));
  const auto [lambda, phi] = lower_control_eigenfunction(m, 1e-3);
  ASSERT_GT(lambda, 0.0);
  const auto lower = canonical_lower_solution(m, phi);
  ASSERT_TRUE(lower.has_value());
  const State upper = m.canonical_upper();
  const EquilibriumResult r = monotone_iterate(m, {*lower, upper});
  EXPECT_TRUE((r.lower.array() >= lower->array() - 1e-14).all());
  EXPECT_TRUE((r.upper.array() <= upper.array() + 1e-14).all());
  EXPECT_TRUE((r.lower.array() <= r.upper.array() + 1e-12).all());
}

TEST(MonotoneIterate, WnvReducedConstantCase) {
  const WnvReduction red = wnv_constant_reduction(40, 2.0);
  const ModelSpec& m = red.plain;
  const auto [lambda, phi] = lower_control_eigenfunction(m, 1e-3);
  ASSERT_GT(lambda, 0.0);
  const auto lower = canonical_lower_solution(m, phi);
  ASSERT_TRUE(lower.has_value());
  const EquilibriumResult r = monotone_iterate(m, {*lower, m.canonical_upper()});
  EXPECT_LT((r.U.array() - 0.5).abs().maxCoeff(), 1e-8);
}

TEST(MonotoneIterate, RejectsBadPairs) {
  const ModelSpec m = unit_logistic(10);
  EXPECT_THROW(monotone_iterate(m, {State::Constant(10, 1, 2.0), State::Constant(10, 1, 1.5)}), std::invalid_argument);
  // 2 is not a lower solution.
  EXPECT_THROW(monotone_iterate(m, {State::Constant(10, 1, 2.0), State::Constant(10, 1, 3.0)}), std::invalid_argument);
  // 0.5 is not an upper solution.
  EXPECT_THROW(monotone_iterate(m, {State::Constant(10, 1, 0.1), State::Constant(10, 1, 0.5)}), std::invalid_argument);
}

TEST(MaxPrinciple, Dichotomy) {
  EXPECT_EQ(strong_max_principle_check(State::Zero(10, 2)).verdict, Dichotomy::all_zero);
  const ModelSpec m = unit_logistic();
  const State U = monotone_iterate(m, {State::Constant(60, 1, 0.1), State::Constant(60, 1, 5.0)}).U;
  const DichotomyReport pos = strong_max_principle_check(U);
  EXPECT_EQ(pos.verdict, Dichotomy::all_positive);
  EXPECT_NEAR(pos.min_value, 1.0, 1e-8);

  State mixed(10, 2);
  mixed.col(0).setZero();
  mixed.col(1).setConstant(0.5);
  const DichotomyReport v = strong_max_principle_check(mixed);
  EXPECT_EQ(v.verdict, Dichotomy::violation);
  EXPECT_EQ(v.zero_components, (std::vector<std::size_t>{0}));
  EXPECT_EQ(v.positive_components, (std::vector<std::size_t>{1}));

  State partial = State::Ones(10, 1);
  partial(4, 0) = 0.0;
  const DichotomyReport p = strong_max_principle_check(partial);
  EXPECT_EQ(p.verdict, Dichotomy::violation);
  EXPECT_EQ(p.mixed_components, (std::vector<std::size_t>{0}));

  std::ostringstream out;
  write_dichotomy(out, v, {"a", "b"});
  EXPECT_NE(out.str().find("zero_components = a"), std::string::npos);
}

TEST(Subhomogeneity, LogisticLinearAndSquare) {
  const ModelSpec lg = unit_logistic(20);
  const SubhomReport r = subhomogeneity_check(lg, random_subhom_samples(lg, State::Constant(20, 1, 3.0), 10000, 7));
  EXPECT_EQ(r.samples, 10000u);
  EXPECT_TRUE(r.all_strict);
  EXPECT_EQ(r.empirical, Subhomogeneity::strong);
  EXPECT_EQ(subhomogeneity_check(lg, {{3, {0.8}, 0.5}}).strong, 1u);

  const SpatialGrid g = build_grid(0.0, 1.0, 20);
  const ModelSpec lin = linear_scalar(g, coefficient(g, 0.7), neumann(0.1, 1.0));
  const SubhomReport rl = subhomogeneity_check(lin, random_subhom_samples(lin, State::Ones(20, 1), 2000, 1));
  EXPECT_EQ(rl.empirical, Subhomogeneity::sub);
  EXPECT_FALSE(rl.all_strict);
  EXPECT_EQ(rl.violated, 0u);

  const ModelSpec sq = scalar_model(5, [](double u) { return u * u; }, [](double u) { return 2 * u; });
  const SubhomReport rs = subhomogeneity_check(sq, random_subhom_samples(sq, State::Ones(5, 1), 500, 2));
  EXPECT_EQ(rs.violated, 500u);
  EXPECT_EQ(rs.empirical, Subhomogeneity::none);
  EXPECT_THROW(subhomogeneity_check(sq, {{0, {0.0}, 0.5}}), std::invalid_argument);
}

TEST(Uniqueness, LogisticThreeBrackets) {
  const ModelSpec m = unit_logistic();
  const std::vector<OrderedPair> seeds = {{State::Constant(60, 1, 0.1), State::Constant(60, 1, 5.0)},
                                          {State::Constant(60, 1, 0.5), State::Constant(60, 1, 1.2)},
                                          {State::Constant(60, 1, 1e-3), State::Constant(60, 1, 40.0)}};
  const UniquenessReport r = uniqueness_probe(m, seeds);
  EXPECT_EQ(r.accepted, 3u);
  EXPECT_LT(r.spread, 1e-7);
  EXPECT_TRUE(r.pass);
}

TEST(Uniqueness, WnvReducedTwoBrackets) {
  const WnvReduction red = wnv_constant_reduction(30, 2.0);
  const ModelSpec& m = red.plain;
  const State up = m.canonical_upper();
  const auto [lambda, phi] = lower_control_eigenfunction(m, 1e-3);
  const auto low = canonical_lower_solution(m, phi);
  ASSERT_TRUE(low.has_value());
  const UniquenessReport r = uniqueness_probe(m, {{*low, up}, {State::Constant(30, 2, 0.3), up}});
  EXPECT_EQ(r.accepted, 2u);
  EXPECT_LT(r.spread, 1e-7);
  for (const State& U : r.equilibria) {
    EXPECT_LT((U.array() - 0.5).abs().maxCoeff(), 1e-8);
  }
}

TEST(Uniqueness, SubcriticalSeedsRejected) {
  const SpatialGrid g = build_grid(0.0, 1.0, 30);
  const ModelSpec m = logistic(g, coefficient(g, -0.3), neumann(0.1, 1.0));
  const auto [lambda, phi] = lower_control_eigenfunction(m, 1e-3);
  EXPECT_LT(lambda, 0.0);
  EXPECT_FALSE(canonical_lower_solution(m, phi).has_value());
  const UniquenessReport r = uniqueness_probe(m, {{0.01 * phi, State::Ones(30, 1)}, {1e-6 * phi, State::Ones(30, 1)}});
  EXPECT_EQ(r.accepted, 0u);
  EXPECT_EQ(r.rejected, 2u);
  EXPECT_FALSE(r.pass);
}

TEST(ContinuityProbe, LogisticUniqueRoot) {
  const ModelSpec m = unit_logistic(40);
  const State U = monotone_iterate(m, {State::Constant(40, 1, 0.1), State::Constant(40, 1, 5.0)}).U;
  for (std::size_t node : {0u, 20u, 39u}) {
    const ContinuityReport r = pointwise_continuity_probe(m, U, node);
    EXPECT_EQ(r.verdict, RootCount::unique_root);
    ASSERT_EQ(r.roots.size(), 1u);
    EXPECT_NEAR(r.roots[0][0], 1.0, 1e-8);
    EXPECT_GE(r.converged_starts, 20u);
  }
  EXPECT_THROW(pointwise_continuity_probe(m, U, 40), std::invalid_argument);
}

TEST(ContinuityProbe, WnvUniqueRoot) {
  const WnvReduction red = wnv_constant_reduction(30, 2.0);
  const ContinuityReport r = pointwise_continuity_probe(red.plain, State::Constant(30, 2, 0.5), 15);
  EXPECT_EQ(r.verdict, RootCount::unique_root);
  EXPECT_NEAR(r.roots[0][0], 0.5, 1e-8);
  EXPECT_NEAR(r.roots[0][1], 0.5, 1e-8);
}

TEST(ContinuityProbe, CubicHasTwoRoots) {
  const ModelSpec m = scalar_model(
      4, [](double u) { return u * (u - 1.0) * (2.0 - u); }, [](double u) { return -3.0 * u * u + 6.0 * u - 2.0; });
  const ContinuityReport r = pointwise_continuity_probe(m, State::Constant(4, 1, 2.0), 1, 40);
  EXPECT_EQ(r.verdict, RootCount::multiple_roots);
  EXPECT_EQ(r.roots.size(), 2u);
}

TEST(CanonicalLower, HalvesUntilLowerSolution) {
  const ModelSpec m = unit_logistic(30);
  const auto lower = canonical_lower_solution(m, State::Ones(30, 1), 8.0);
  ASSERT_TRUE(lower.has_value());
  EXPECT_DOUBLE_EQ((*lower)(0, 0), 1.0);
  State neg = State::Ones(30, 1);
  neg(2, 0) = -1;
  EXPECT_THROW(canonical_lower_solution(m, neg), std::invalid_argument);
}

TEST(EquilibriumCsv, Layout) {
  std::ostringstream out;
  write_equilibrium_csv(out, State::Ones(2, 2), {0.25, 0.75});
  EXPECT_EQ(out.str(), "component,node_index,x,value\n0,0,0.25,1\n0,1,0.75,1\n1,0,0.25,1\n1,1,0.75,1\n");
}
