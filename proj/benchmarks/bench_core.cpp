#include <benchmark/benchmark.h>

#include <netred/balancing.hpp>
#include <netred/h2.hpp>
#include <netred/io.hpp>
#include <netred/optimizer.hpp>
#include <netred/reduction.hpp>

namespace {

using namespace netred;

struct Fixture {
  DirectedNetwork net;
  Clustering clus;
  BalancedRepresentation rep;
  QuotientModel quot;
  WeightParameterization param;
  Eigen::VectorXd w0;
  ErrorSystemData data;

  static Fixture make(int n, int r, std::uint64_t seed) {
    DirectedNetwork net = random_balanced_network(n, 2, seed, 1, 1);
    Clustering clus = random_contiguous_clustering(n, r, seed);
    BalancedRepresentation rep = balanced_representation(net);
    QuotientModel quot = quotient(incidence(net), clus, rep, net.output_map());
    WeightParameterization param = parameterize(quot);
    Eigen::VectorXd w0 = projection_initial_weights(rep.laplacian, clus, quot);
    ErrorSystemData data = build_error_system_data(rep, net.output_map(), quot);
    return {std::move(net), std::move(clus), std::move(rep), std::move(quot),
            std::move(param), std::move(w0), std::move(data)};
  }
};

void BM_Laplacian(benchmark::State& state) {
  const DirectedNetwork net =
      random_balanced_network(static_cast<int>(state.range(0)), 4, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laplacian(net));
  }
}
BENCHMARK(BM_Laplacian)->Arg(8)->Arg(16)->Arg(32);

void BM_BalancedRepresentation(benchmark::State& state) {
  const DirectedNetwork net =
      random_network(static_cast<int>(state.range(0)), 10, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(balanced_representation(net));
  }
}
BENCHMARK(BM_BalancedRepresentation)->Arg(8)->Arg(16)->Arg(32);

void BM_H2Norm(benchmark::State& state) {
  const Fixture f = Fixture::make(static_cast<int>(state.range(0)), 4, 3);
  const ErrorRealization e = error_realization(f.rep, f.net.output_map(), f.quot, f.w0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(h2_norm(e.a, e.b, e.c));
  }
}
BENCHMARK(BM_H2Norm)->Arg(8)->Arg(12)->Arg(16);

void BM_FixedWeightBound(benchmark::State& state) {
  const Fixture f = Fixture::make(static_cast<int>(state.range(0)), 4, 4);
  OptimizerConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fixed_weight_bound(f.data, f.w0, cfg));
  }
}
BENCHMARK(BM_FixedWeightBound)->Unit(benchmark::kMillisecond)->Arg(7)->Arg(9);

void BM_WeightingStep(benchmark::State& state) {
  const Fixture f = Fixture::make(static_cast<int>(state.range(0)), 4, 5);
  OptimizerConfig cfg;
  const Eigen::VectorXd mu0 = mu_from_weights(f.param, f.w0);
  for (auto _ : state) {
    SubproblemLayout layout;
    const ConicProgram prog = linearized_subproblem(f.data, f.param, mu0, cfg, &layout);
    benchmark::DoNotOptimize(default_solver().solve(prog, cfg.solver));
  }
}
BENCHMARK(BM_WeightingStep)->Unit(benchmark::kMillisecond)->Arg(7)->Arg(9);

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
