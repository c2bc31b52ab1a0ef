#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include <omp.h>

#include "loocmi/kernels.hpp"
#include "loocmi/numeric.hpp"

using namespace loocmi;
using namespace loocmi::kernels;

namespace {

struct SumAcc {
  CompensatedSum sum;
  std::uint64_t visits = 0;
  void merge(const SumAcc& o) {
    sum.merge(o.sum);
    visits += o.visits;
  }
};

SumAcc weight_sum(const TupleLaw& law, Exec exec) {
  return reduce(
      exec, law.total(), [] { return SumAcc{}; },
      [&](SumAcc& acc, std::uint64_t b, std::uint64_t e) {
        law.for_each(b, e, [&](std::span<const std::uint32_t>, double w) {
          acc.sum.add(w);
          ++acc.visits;
        });
      });
}

}  // namespace

TEST(TupleLaw, IidWeightsSumToOne) {
  const std::vector<double> m = {0.5, 0.3, 0.2};
  const TupleLaw law(m, 4, false);
  EXPECT_EQ(law.total(), 81u);
  EXPECT_DOUBLE_EQ(law.term_count(), 81.0);
  const auto acc = weight_sum(law, Exec::serial);
  EXPECT_NEAR(acc.sum.value(), 1.0, 1e-15);
  EXPECT_EQ(acc.visits, 81u);
}

TEST(TupleLaw, DistinctLawRenormalizes) {
  const std::vector<double> m = {0.5, 0.25, 0.25};
  const TupleLaw law(m, 2, true);
  // P(distinct) = 1 - sum p^2
  EXPECT_NEAR(law.distinct_probability(), 1 - (0.25 + 0.0625 + 0.0625), 1e-15);
  const auto acc = weight_sum(law, Exec::serial);
  EXPECT_NEAR(acc.sum.value(), 1.0, 1e-15);
  EXPECT_EQ(acc.visits, 6u);
}

TEST(TupleLaw, SkipsZeroMass) {
  const std::vector<double> m = {0.5, 0.0, 0.5};
  const TupleLaw law(m, 3, false);
  EXPECT_EQ(weight_sum(law, Exec::serial).visits, 8u);
}

TEST(TupleLaw, MultisetWeightsMatchOrderedTuples) {
  const std::vector<double> m = {0.1, 0.2, 0.3, 0.4};
  for (const bool distinct : {false, true}) {
    const TupleLaw ordered(m, 3, distinct, false);
    const TupleLaw multi(m, 3, distinct, true);
    std::map<std::vector<std::uint32_t>, double> a, b;
    ordered.for_each(0, ordered.total(), [&](std::span<const std::uint32_t> idx, double w) {
      std::vector<std::uint32_t> key(idx.begin(), idx.end());
      std::sort(key.begin(), key.end());
      a[key] += w;
    });
    multi.for_each(0, multi.total(), [&](std::span<const std::uint32_t> idx, double w) {
      EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
      b[std::vector<std::uint32_t>(idx.begin(), idx.end())] += w;
    });
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [k, w] : a) EXPECT_NEAR(b[k], w, 1e-15);
  }
}

TEST(TupleLaw, ForEachResumesMidRange) {
  const std::vector<double> m = {0.25, 0.25, 0.5};
  const TupleLaw law(m, 3, false);
  std::vector<std::vector<std::uint32_t>> all, pieces;
  law.for_each(0, law.total(), [&](auto idx, double) { all.emplace_back(idx.begin(), idx.end()); });
  for (std::uint64_t b = 0; b < law.total(); b += 5) {
    law.for_each(b, std::min<std::uint64_t>(b + 5, law.total()),
                 [&](auto idx, double) { pieces.emplace_back(idx.begin(), idx.end()); });
  }
  EXPECT_EQ(all, pieces);
}

TEST(Reduce, ParallelMatchesSerial) {
  const std::vector<double> m = {0.05, 0.15, 0.3, 0.2, 0.1, 0.2};
  const TupleLaw law(m, 5, false);
  const auto s = weight_sum(law, Exec::serial);
  const auto p = weight_sum(law, Exec::parallel);
  EXPECT_EQ(s.visits, p.visits);
  EXPECT_NEAR(s.sum.value(), p.sum.value(), 1e-12);
}

TEST(Reduce, ParallelIsIndependentOfThreadCount) {
  const auto run = [] {
    return reduce_parallel(
        100000, [] { return SumAcc{}; },
        [](SumAcc& acc, std::uint64_t b, std::uint64_t e) {
          for (auto i = b; i < e; ++i) acc.sum.add(std::sin(static_cast<double>(i)) * 1e-3);
        });
  };
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = run().sum.value();
  omp_set_num_threads(4);
  const double four = run().sum.value();
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
}

TEST(Reduce, EmptyRangeGivesFreshAccumulator) {
  const auto acc = reduce_parallel(0, [] { return SumAcc{}; },
                                   [](SumAcc&, std::uint64_t, std::uint64_t) { FAIL(); });
  EXPECT_EQ(acc.visits, 0u);
}

TEST(Reduce, RethrowsFirstChunkError) {
  EXPECT_THROW(reduce_parallel(
                   1000, [] { return SumAcc{}; },
                   [](SumAcc&, std::uint64_t b, std::uint64_t) {
                     if (b >= 500) throw std::runtime_error("boom");
                   }),
               std::runtime_error);
}

TEST(SplitMix64, StreamsAreReproducibleAndDistinct) {
  SplitMix64 a(42, 7), b(42, 7), c(42, 8);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    seen.insert(x);
    seen.insert(c.next());
  }
  EXPECT_EQ(seen.size(), 200u);
}

TEST(SplitMix64, UniformInUnitInterval) {
  SplitMix64 g(1, 0);
  double mean = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u / 20000;
  }
  EXPECT_NEAR(mean, 0.5, 0.01);
}
