#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "loocmi/bounds.hpp"
#include "loocmi/errors.hpp"
#include "loocmi/learners.hpp"
#include "loocmi/oig.hpp"

using namespace loocmi;

namespace {

DomainPtr grid(std::size_t m) {
  return std::make_shared<const FiniteDomain>(FiniteDomain::integer_range(m));
}

const BoundReport& find(const std::vector<BoundReport>& rs, const std::string& id) {
  for (const auto& r : rs) {
    if (r.theorem == id) return r;
  }
  throw std::runtime_error("no report " + id);
}

}  // namespace

TEST(BoundFormulas, Thm21) {
  EXPECT_EQ(bound_thm21(0.0, 4), 0.0);
  EXPECT_NEAR(bound_thm21(std::log(5.0), 4), 1.0, 1e-15);
  EXPECT_NEAR(bound_thm21(0.8, 4), 0.8 / std::log(5.0), 1e-15);
  EXPECT_NEAR(bound_thm21(0.8, 4), 0.497067, 1e-6);
  EXPECT_THROW(bound_thm21(0.1, 0), InputError);
  EXPECT_THROW(bound_thm21(-0.1, 3), InputError);
}

TEST(BoundFormulas, Thm23) {
  EXPECT_EQ(bound_thm23(0.0), 0.0);
  EXPECT_EQ(bound_thm23(0.5), 1.0);
  EXPECT_EQ(bound_thm23(2.0), 2.0);
  EXPECT_THROW(bound_thm23(-1.0), InputError);
}

TEST(BoundFormulas, Thm31Pointwise) {
  EXPECT_EQ(bound_thm31_pointwise(0.0, 4), 0.0);
  EXPECT_NEAR(bound_thm31_pointwise(1.0, 4), std::log(5.0), 1e-15);
  EXPECT_NEAR(bound_thm31_pointwise(0.5, 4), std::log(2.0) + 0.5 * std::log(5.0), 1e-15);
  EXPECT_NEAR(bound_thm31_pointwise(0.5, 4), 1.497866, 1e-6);
  EXPECT_THROW(bound_thm31_pointwise(1.5, 4), InputError);
}

TEST(BoundFormulas, Cor32Branches) {
  EXPECT_NEAR(bound_cor32(0.0, 4), std::exp(-1.0) / 5.0, 1e-15);
  EXPECT_NEAR(bound_cor32(0.0, 4), 0.073576, 1e-6);
  EXPECT_NEAR(bound_cor32(5.0, 4), 1.0 + std::log(5.0), 1e-15);
  EXPECT_NEAR(bound_cor32(1.0, 4), 2 * std::log(5.0) / 5 + (1 + std::exp(-1.0)) / 5, 1e-15);
  EXPECT_NEAR(bound_cor32(1.0, 4), 0.917351, 1e-6);
  // theta/(n+1) = 1/2 falls in the first branch
  EXPECT_NEAR(bound_cor32(2.0, 3), 1.0 + 2.0 * std::log(4.0) / 4.0, 1e-15);
  EXPECT_THROW(bound_cor32(INFINITY, 3), InputError);
}

TEST(BoundFormulas, Thm41AndSupportVectors) {
  EXPECT_NEAR(bound_thm41(1, 4), 0.2 * (2 * std::log(5.0) + 1), 1e-15);
  EXPECT_NEAR(bound_thm41(1, 4), 0.843775, 1e-6);
  EXPECT_NEAR(bound_thm41(1, 1), 1.193147, 1e-6);
  EXPECT_NEAR(bound_thm41(3, 3), 0.75 * (2 * std::log(4.0) + 1), 1e-15);
  EXPECT_THROW(bound_thm41(0, 3), InputError);
  EXPECT_THROW(bound_thm41(4, 3), InputError);
  EXPECT_EQ(bound_support_vectors(1.0, 4), bound_thm41(1, 4));
}

TEST(BoundReport, Factories) {
  const auto ok = BoundReport::inequality("t", "c", 1.0, 1.0 - 5e-10);
  EXPECT_TRUE(ok.pass);
  EXPECT_LT(ok.slack, 0.0);
  EXPECT_FALSE(BoundReport::inequality("t", "c", 1.0, 0.9).pass);
  const auto eq = BoundReport::equality("t", "c", 1.0, 1.0 + 5e-11);
  EXPECT_TRUE(eq.pass);
  EXPECT_TRUE(eq.identity);
  EXPECT_FALSE(BoundReport::equality("t", "c", 1.0, 1.0 + 5e-10).pass);
  const auto sk = BoundReport::skip("t", "c", "why");
  EXPECT_TRUE(sk.skipped);
  EXPECT_TRUE(sk.pass);
  EXPECT_EQ(sk.note, "why");
}

TEST(Verify, ConstantCorrectIsAllZero) {
  const auto dist = FiniteDistribution::uniform({{0, 1}, {1, 1}});
  const ConstantLearner learner(1);
  const MeasureSetting s{learner, dist, 3};
  const auto m = compute_bundle(s);
  const auto [lo, hi] = verify_sandwich_thm33(m);
  EXPECT_EQ(lo.lhs, 0.0);
  EXPECT_EQ(hi.rhs, 0.0);
  EXPECT_TRUE(lo.pass && hi.pass);
  const auto t51 = verify_thm51(m);
  EXPECT_TRUE(t51.pass);
  EXPECT_EQ(t51.lhs, 0.0);
  for (const auto& r : verify_chain(m)) EXPECT_TRUE(r.pass) << r.theorem;
}

TEST(Verify, AlwaysErrIsTightEverywhere) {
  const auto d = grid(4);
  const auto dist = FiniteDistribution::uniform({{0, 1}, {1, 0}, {2, 1}, {3, 0}});
  const AlwaysErrLearner learner(d, dist);
  const MeasureSetting s{learner, dist, 3, {}, SupersampleLaw::distinct};
  const auto m = compute_bundle(s);
  const double ln4 = std::log(4.0);
  const auto [lo, hi] = verify_sandwich_thm33(m);
  EXPECT_NEAR(lo.lhs, ln4, 1e-12);
  EXPECT_NEAR(lo.rhs, ln4, 1e-12);
  EXPECT_NEAR(hi.rhs, ln4, 1e-12);
  const auto t51 = verify_thm51(m);
  EXPECT_TRUE(t51.pass);
  EXPECT_NEAR(t51.rhs, ln4, 1e-12);
  const auto t21 = verify_thm21(m);
  EXPECT_TRUE(find(t21, "thm21").pass);
  EXPECT_NEAR(find(t21, "thm21_unit").lhs, 1.0, 1e-12);
}

TEST(Verify, Fig1SandwichIsStrict) {
  const auto d = grid(4);
  const Fig1ThresholdLearner learner(d);
  const auto dist = FiniteDistribution::uniform({{0, 1}, {1, 1}, {2, 0}, {3, 0}});
  const MeasureSetting s{learner, dist, 3};
  const auto m = compute_bundle(s);
  const auto [lo, hi] = verify_sandwich_thm33(m);
  EXPECT_TRUE(lo.pass && hi.pass);
  EXPECT_GT(lo.slack, 1e-6);
  EXPECT_GT(hi.slack, 1e-6);
  EXPECT_TRUE(verify_thm31_pointwise(m).pass);
  EXPECT_TRUE(verify_thm23(m).pass);
  EXPECT_TRUE(verify_thm51(m).pass);
  EXPECT_TRUE(verify_thm51(s).pass);
  EXPECT_TRUE(verify_cor32(m).skipped);
}

TEST(Verify, SandwichRejectsNonInterpolatingLearner) {
  const auto dist = FiniteDistribution::uniform({{0, 1}, {1, 0}});
  const ConstantLearner learner(0);
  const MeasureSetting s{learner, dist, 2};
  EXPECT_THROW(verify_sandwich_thm33(s), InputError);
  const auto m = compute_bundle(s);
  EXPECT_TRUE(find(verify_thm21(m), "thm21").skipped);
  EXPECT_TRUE(verify_thm23(m).pass);
}

TEST(Verify, MaxMarginCertificates) {
  const auto d = grid(6);
  const MaxMarginThreshold learner(d, ThresholdConvention::upper);
  const auto dist = FiniteDistribution({{0, 0}, {1, 0}, {4, 1}, {5, 1}}, {0.2, 0.3, 0.3, 0.2});
  const MeasureSetting s{learner, dist, 3};
  const auto m = compute_bundle(s);
  const auto premise = verify_certificate_premise(m);
  EXPECT_FALSE(premise.skipped);
  EXPECT_TRUE(premise.pass);
  EXPECT_EQ(premise.lhs, 0.0);
  EXPECT_TRUE(verify_cor32(m).pass);
  const auto svm = verify_support_vector_bound(m);
  EXPECT_FALSE(svm.skipped);
  EXPECT_TRUE(svm.pass);
  EXPECT_NEAR(svm.rhs, bound_support_vectors(*m.summary.theta_mean, 3), 1e-15);
  EXPECT_TRUE(verify_thm51(m).pass);
}

TEST(Verify, Thm41OnThresholds) {
  const auto d = grid(5);
  const OigLearner learner(HypothesisClass::thresholds(d, ThresholdConvention::upper));
  const auto dist = FiniteDistribution::uniform({{0, 0}, {1, 0}, {2, 1}, {3, 1}, {4, 1}});
  const MeasureSetting s{learner, dist, 3};
  const auto m = compute_bundle(s);
  const auto rs = verify_thm41(m, learner);
  for (const char* id : {"thm41_outdegree", "thm41_density", "thm41_rloo", "thm41", "thm41_risk"}) {
    EXPECT_TRUE(find(rs, id).pass) << id;
    EXPECT_FALSE(find(rs, id).skipped) << id;
  }
  EXPECT_NEAR(find(rs, "thm41").rhs, bound_thm41(1, 3), 1e-15);
  EXPECT_TRUE(verify_thm51(m).pass);
}

TEST(Verify, ChainSkipsWithReasons) {
  const auto d = grid(4);
  const OigLearner learner(HypothesisClass::thresholds(d, ThresholdConvention::upper));
  const auto dist = FiniteDistribution::uniform({{0, 0}, {1, 1}, {2, 1}, {3, 1}});
  const auto rs = verify_chain(MeasureSetting{learner, dist, 2});
  ASSERT_EQ(rs.size(), 4u);
  EXPECT_FALSE(rs[0].skipped);
  EXPECT_FALSE(rs[1].skipped);
  EXPECT_TRUE(rs[2].skipped);
  EXPECT_FALSE(rs[2].note.empty());
  EXPECT_TRUE(rs[3].skipped);
}

TEST(Counterexample, PosteriorVanishesAtDeletedMaximum) {
  const auto d = grid(5);
  const Fig1ThresholdLearner learner(d);
  const Sample z = {{0, 1}, {1, 1}, {2, 1}, {3, 0}, {4, 0}};
  const auto r = counterexample_fig1(learner, {}, z);
  ASSERT_EQ(r.posterior.size(), 5u);
  EXPECT_EQ(r.posterior[2], 0.0);
  double total = 0;
  for (const double p : r.posterior) total += p;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_NEAR(r.prob_all_zero, 0.8, 1e-15);
  EXPECT_NEAR(r.conditional_entropy, std::log(4.0), 1e-15);
  EXPECT_LT(r.conditional_entropy, std::log(5.0) - 1e-6);
  EXPECT_TRUE(r.pass());
  const Sample wrong = {{0, 1}, {1, 1}, {2, 0}, {3, 0}, {4, 0}};
  EXPECT_THROW(counterexample_fig1(learner, {}, wrong), InputError);
}

TEST(RateDiagnostic, RatioAndZeroRisk) {
  MeasureBundle m;
  m.n = 4;
  m.summary.loo_ecmi = 0.4;
  m.risk.risk = 0.1;
  const auto r = rate_diagnostic(m);
  EXPECT_NEAR(r.ratio, 0.4 / std::log(5.0) / 0.1, 1e-15);
  EXPECT_TRUE(r.within);
  m.risk.risk = 0.0;
  EXPECT_TRUE(std::isnan(rate_diagnostic(m).ratio));
}
