// Serial reference vs OpenMP kernels on the hot paths: exact supersample
// enumeration, the population-risk route, Monte-Carlo and a bare TupleLaw sum.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "loocmi/infotheory.hpp"
#include "loocmi/kernels.hpp"
#include "loocmi/learners.hpp"

using namespace loocmi;

namespace {

struct Fixture {
  DomainPtr domain;
  ErmLearner learner;
  FiniteDistribution dist;

  explicit Fixture(std::size_t m)
      : domain(std::make_shared<const FiniteDomain>(FiniteDomain::integer_range(m))),
        learner(HypothesisClass::thresholds(domain, ThresholdConvention::upper)),
        dist(FiniteDistribution::uniform(support(m))) {}

  static std::vector<LabeledExample> support(std::size_t m) {
    std::vector<LabeledExample> s;
    for (std::size_t x = 0; x < m; ++x) s.push_back({static_cast<InputId>(x), Label(x >= m / 2)});
    return s;
  }
};

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

// ordered tuples, so the symmetric shortcut does not hide the work
void BM_Enumerate(benchmark::State& state) {
  const Fixture f(6);
  MeasureSetting s{f.learner, f.dist, static_cast<std::size_t>(state.range(1))};
  s.use_symmetry = false;
  s.budget = 1e12;
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_supersamples(s, {}, exec_of(state)).loo_ecmi);
  }
  label(state);
}
BENCHMARK(BM_Enumerate)->ArgsProduct({{0, 1}, {4, 5, 6}})->Unit(benchmark::kMillisecond);

void BM_ExpectedRisk(benchmark::State& state) {
  const Fixture f(8);
  MeasureSetting s{f.learner, f.dist, static_cast<std::size_t>(state.range(1))};
  s.use_symmetry = false;
  s.budget = 1e12;
  for (auto _ : state) benchmark::DoNotOptimize(expected_risk(s, exec_of(state)).risk);
  label(state);
}
BENCHMARK(BM_ExpectedRisk)->ArgsProduct({{0, 1}, {5, 6}})->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  const Fixture f(6);
  const MeasureSetting s{f.learner, f.dist, 5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(loo_ecmi_mc(s, static_cast<std::uint64_t>(state.range(1)), 1, exec_of(state)));
  }
  label(state);
}
BENCHMARK(BM_MonteCarlo)->ArgsProduct({{0, 1}, {100000}})->Unit(benchmark::kMillisecond);

struct Sum {
  CompensatedSum sum;
  void merge(const Sum& o) { sum.merge(o.sum); }
};

void BM_TupleLawSum(benchmark::State& state) {
  const std::vector<double> m = {0.1, 0.2, 0.3, 0.15, 0.15, 0.1};
  const kernels::TupleLaw law(m, static_cast<std::size_t>(state.range(1)), false);
  for (auto _ : state) {
    const auto acc = kernels::reduce(
        exec_of(state), law.total(), [] { return Sum{}; },
        [&](Sum& a, std::uint64_t b, std::uint64_t e) {
          law.for_each(b, e, [&](std::span<const std::uint32_t>, double w) { a.sum.add(w); });
        });
    benchmark::DoNotOptimize(acc.sum.value());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * law.total()));
  label(state);
}
BENCHMARK(BM_TupleLawSum)->ArgsProduct({{0, 1}, {7, 8}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
