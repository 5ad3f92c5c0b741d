#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "hardy/geom.hpp"
#include "hardy/ineq1d.hpp"
#include "hardy/quad.hpp"
#include "hardy/varmin.hpp"

using namespace hardy;

namespace {
const double kE2 = std::exp(2.0);

void BM_IntegrateWeighted(benchmark::State& state) {
  const GradedMesh m = make_mesh(static_cast<std::size_t>(state.range(0)), 3, 1e-6);
  std::vector<double> v;
  for (double t : m.nodes()) v.push_back(std::sin(5 * t) * t);
  const PiecewiseFn f(m, v);
  const auto w = WeightSpec::power_log(-1, 2, kE2);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_weighted(f, 2, 0, w).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegrateWeighted)->Arg(1024)->Arg(4096)->Arg(16384);

void BM_Deficit(benchmark::State& state) {
  const Params P(0, 2, kE2);
  const DeficitEvaluator eval(InequalitySpec::make(InequalityId::ThmNC1, P),
                              make_mesh(static_cast<std::size_t>(state.range(0)), 2, 1e-4));
  std::mt19937_64 rng(1);
  const PiecewiseFn u = random_test_function(eval.mesh(), P, rng);
  for (auto _ : state) benchmark::DoNotOptimize(eval(u).deficit);
}
BENCHMARK(BM_Deficit)->Arg(1024)->Arg(4096);

void BM_PartitionDeficit(benchmark::State& state) {
  const Params P(0, 2, 2 * e_to_the_e());
  const DeficitEvaluator eval(InequalitySpec::make(InequalityId::Lem7_7, P), make_mesh(1024, 2, 1e-4));
  std::mt19937_64 rng(2);
  const PiecewiseFn u = random_test_function(eval.mesh(), P, rng, true);
  for (auto _ : state) benchmark::DoNotOptimize(eval(u).deficit);
}
BENCHMARK(BM_PartitionDeficit);

void BM_QuotientGradient(benchmark::State& state) {
  const QuotientObjective obj(Params(0, 2.5, kE2), make_mesh(static_cast<std::size_t>(state.range(0)), 3, 1e-6),
                              0.3, false, 0.01);
  std::vector<double> v;
  for (double t : obj.mesh().nodes()) v.push_back(std::pow(t, 0.4));
  for (auto _ : state) benchmark::DoNotOptimize(obj.gradient(v));
}
BENCHMARK(BM_QuotientGradient)->Arg(1024)->Arg(4096);

void BM_BestConstant(benchmark::State& state) {
  MinimizeConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(best_constant(Params(0, 2, kE2), BoundaryMode::with_boundary(0.5), cfg).quotient);
}
BENCHMARK(BM_BestConstant)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_NdDeficit(benchmark::State& state) {
  const auto d = DomainSpec::ellipse(2, 1);
  const Params P(0, 2, 2 * kE2);
  const auto k = nd_constants(d, P, admissible_eta(d, P, default_eta(d)));
  const GradedMesh m = make_mesh(256, 2, 1e-4).scaled(k.eta);
  std::mt19937_64 rng(3);
  FieldFn u{random_test_function(m, P, rng), 0.5, {{2, 0.3, -0.2}, {5, 0.1, 0.1}}};
  for (auto _ : state)
    benchmark::DoNotOptimize(nd_deficit(NdId::Eq2_6, d, u, k, static_cast<std::size_t>(state.range(0))).deficit);
}
BENCHMARK(BM_NdDeficit)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
}  // namespace

BENCHMARK_MAIN();
