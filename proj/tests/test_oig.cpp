#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "loocmi/bounds.hpp"
#include "loocmi/errors.hpp"
#include "loocmi/infotheory.hpp"
#include "loocmi/oig.hpp"

using namespace loocmi;

namespace {

DomainPtr grid(std::size_t m) {
  return std::make_shared<const FiniteDomain>(FiniteDomain::integer_range(m));
}

std::vector<InputId> first_points(std::size_t k) {
  std::vector<InputId> p(k);
  for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<InputId>(i);
  return p;
}

OneInclusionGraph threshold_path(std::size_t m, ThresholdConvention c = ThresholdConvention::upper) {
  return OneInclusionGraph::build(HypothesisClass::thresholds(grid(m), c), first_points(m));
}

OneInclusionGraph cube(std::size_t k) {
  return OneInclusionGraph::build(HypothesisClass::all_labelings(grid(k)), first_points(k));
}

}  // namespace

TEST(OneInclusionGraph, ThresholdsGiveAPath) {
  const auto g = threshold_path(3);
  ASSERT_EQ(g.vertex_count(), 4u);
  EXPECT_EQ(g.edge_count(), 3u);
  const std::vector<std::vector<Label>> expect = {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(g.labels(v), expect[v]);
  for (const auto& e : g.edges()) {
    EXPECT_LT(e.a, e.b);
    EXPECT_EQ(std::popcount(g.vertex(e.a) ^ g.vertex(e.b)), 1);
    EXPECT_EQ(g.vertex(e.a) ^ g.vertex(e.b), std::uint64_t{1} << e.coordinate);
  }
  EXPECT_TRUE(g.edge_between(1, 2).has_value());
  EXPECT_FALSE(g.edge_between(0, 2).has_value());
  EXPECT_EQ(g.find(0b110), 2u);
  EXPECT_FALSE(g.find(0b101).has_value());
}

TEST(OneInclusionGraph, CubeCounts) {
  const auto g = cube(3);
  EXPECT_EQ(g.vertex_count(), 8u);
  EXPECT_EQ(g.edge_count(), 12u);
}

TEST(OneInclusionGraph, RepeatedPointsCollapseCoordinates) {
  const auto cls = HypothesisClass::thresholds(grid(3), ThresholdConvention::upper);
  const std::vector<InputId> pts = {1, 1, 2};
  const auto g = OneInclusionGraph::build(cls, pts);
  // coordinates 0 and 1 always agree, so only the last coordinate has edges
  EXPECT_EQ(g.vertex_count(), 3u);
  for (const auto& e : g.edges()) EXPECT_EQ(e.coordinate, 2u);
}

TEST(FlowNetwork, SmallMaxFlow) {
  FlowNetwork net(4);
  const auto a = net.add_arc(0, 1, 3);
  net.add_arc(0, 2, 2);
  net.add_arc(1, 2, 1);
  const auto d = net.add_arc(1, 3, 2);
  net.add_arc(2, 3, 3);
  EXPECT_EQ(net.max_flow(0, 3), 5);
  EXPECT_EQ(net.flow(a), 3);
  EXPECT_EQ(net.flow(d), 2);
  EXPECT_EQ(net.arc_count(), 5u);
}

TEST(Orientation, PathWithOutDegreeOne) {
  const auto g = threshold_path(3);
  const auto p = orient_bounded(g, 1);
  for (std::size_t v = 0; v < g.vertex_count(); ++v) EXPECT_LE(p.out_weight(v), 1.0);
  double total = 0;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    EXPECT_TRUE(p.forward(e) == 0.0 || p.forward(e) == 1.0);
    const auto& edge = g.edges()[e];
    EXPECT_EQ(p(edge.a, edge.b) + p(edge.b, edge.a), 1.0);
    total += 1.0;
  }
  double out = 0;
  for (const double w : p.out_weights()) out += w;
  EXPECT_EQ(out, total);
  EXPECT_EQ(p(0, 3), 0.0);
}

TEST(Orientation, CubeNeedsThree) {
  const auto g = cube(3);
  const auto p = orient_bounded(g, 3);
  EXPECT_LE(p.max_out_weight(), 3.0);
  double out = 0;
  for (const double w : p.out_weights()) out += w;
  EXPECT_EQ(out, 12.0);
  EXPECT_THROW(orient_bounded(g, 1), InfeasibleError);
}

TEST(ConsistentVertices, OneOrTwoCompletions) {
  const auto g = threshold_path(3, ThresholdConvention::lower);
  const std::vector<Label> partial = {1, 0, 0};
  const auto both = consistent_vertices(g, partial, 1);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_TRUE(g.edge_between(both[0], both[1]).has_value());
  const std::vector<Label> forced = {1, 1, 0};
  EXPECT_EQ(consistent_vertices(g, forced, 0).size(), 1u);
  const std::vector<Label> bad = {0, 0, 1};
  EXPECT_THROW(consistent_vertices(g, bad, 1), RealizabilityError);
}

TEST(OigPredict, FollowsTheOrientation) {
  const auto g = threshold_path(3, ThresholdConvention::lower);
  // completions of (1, ?, 0) are 100 and 110, adjacent through coordinate 1
  const auto e = g.edge_between(*g.find(0b001), *g.find(0b011));
  ASSERT_TRUE(e.has_value());
  std::vector<double> forward(g.edge_count(), 0.5);
  forward[*e] = 1.0;
  const ProbabilityAssignment p(g, forward);
  const auto a = g.edges()[*e].a, b = g.edges()[*e].b;
  const std::vector<Label> partial = {1, 0, 0};
  const auto law = oig_predict(g, p, partial, 1);
  ASSERT_TRUE(law.is_point_mass());
  EXPECT_EQ(law.label(0), g.label(b, 1));
  EXPECT_NE(g.label(a, 1), g.label(b, 1));
  const std::vector<Label> forced = {1, 1, 0};
  EXPECT_EQ(oig_predict(g, p, forced, 0).label(0), 1.0);
}

TEST(OigLooError, PathWithTwoTrainingPoints) {
  const auto g = threshold_path(3);
  const auto p = orient_bounded(g, 1);
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    const double r = oig_loo_error(g, p, v);
    EXPECT_TRUE(r == 0.0 || std::abs(r - 1.0 / 3.0) < 1e-15) << r;
  }
}

TEST(Density, PathsAndCubes) {
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto g = threshold_path(k);
    EXPECT_EQ(max_subgraph_density(g), Rational(static_cast<std::int64_t>(k), k + 1));
    EXPECT_EQ(max_subgraph_density(g, DensityMethod::flow), max_subgraph_density(g));
  }
  EXPECT_EQ(max_subgraph_density(cube(3)), Rational(3, 2));
  EXPECT_EQ(max_subgraph_density(cube(3), DensityMethod::flow), Rational(3, 2));
  EXPECT_EQ(max_subgraph_density(cube(4), DensityMethod::enumeration), Rational(2, 1));
  EXPECT_EQ(max_subgraph_density(cube(4), DensityMethod::flow), Rational(2, 1));
  EXPECT_EQ(max_subgraph_density(cube(5)), Rational(5, 2));
  EXPECT_THROW(max_subgraph_density(cube(5), DensityMethod::enumeration), BudgetError);
}

TEST(Density, DenseCoreInsideSparseGraph) {
  // a 3-cube plus a pendant path: the cube alone is densest
  const auto d = grid(4);
  std::vector<std::vector<Label>> rows;
  for (int m = 0; m < 8; ++m) rows.push_back({Label(m & 1), Label((m >> 1) & 1), Label(m >> 2), 0});
  rows.push_back({1, 1, 1, 1});
  const HypothesisClass cls(d, rows);
  const auto g = OneInclusionGraph::build(cls, first_points(4));
  EXPECT_EQ(g.edge_count(), 13u);
  EXPECT_EQ(max_subgraph_density(g, DensityMethod::enumeration), Rational(3, 2));
  EXPECT_EQ(max_subgraph_density(g, DensityMethod::flow), Rational(3, 2));
}

TEST(OigLearner, InterpolatesAndMemoizes) {
  const auto d = grid(4);
  const OigLearner learner(HypothesisClass::thresholds(d, ThresholdConvention::upper));
  EXPECT_EQ(learner.d(), 1u);
  const Sample s = {{3, 1}, {0, 0}, {2, 1}};
  for (const auto& z : s) {
    const auto law = learner.predict(s, z.input);
    EXPECT_EQ(law.prob_of(z.label), 1.0);
  }
  const auto law = learner.predict(s, 1);
  EXPECT_NEAR(law.prob_of(0) + law.prob_of(1), 1.0, 1e-15);
  const std::vector<InputId> a = {0, 2, 3, 1}, b = {3, 2, 1, 0};
  EXPECT_EQ(learner.entry(a), learner.entry(b));
  EXPECT_EQ(*learner.loo_certificate(s), 1.0);
  EXPECT_FALSE(learner.cached().empty());
}

TEST(OigLearner, LooBoundOnFivePointThresholds) {
  const auto d = grid(5);
  const OigLearner learner(HypothesisClass::thresholds(d, ThresholdConvention::upper));
  const auto dist = FiniteDistribution::uniform({{0, 0}, {1, 0}, {2, 1}, {3, 1}, {4, 1}});
  const MeasureSetting s{learner, dist, 4};
  const auto sum = enumerate_supersamples(s);
  EXPECT_NEAR(bound_thm41(1, 4), 0.843775, 1e-6);
  EXPECT_LE(sum.loo_ecmi, bound_thm41(1, 4));
  EXPECT_LE(sum.max_rloo, 1.0 / 5.0 + 1e-15);
  EXPECT_LE(expected_risk(s).risk, 1.0 / 5.0 + 1e-12);
}
