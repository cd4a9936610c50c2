// Serial reference vs blocked OpenMP history convolution, and one full stepper run per kernel.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fracstep/cq_stepper.hpp"
#include "fracstep/history.hpp"

using namespace fracstep;

namespace {

// Runs a full N-step convolution: push one vector, evaluate, repeat.
void run_history(benchmark::State& state, HistoryKernel kernel) {
  const int dim = static_cast<int>(state.range(0));
  const int steps = static_cast<int>(state.range(1));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(steps + 1), x(dim), out(dim);
  for (auto& v : w) v = u(rng);
  for (auto& v : x) v = u(rng);
  for (auto _ : state) {
    HistorySum<double> h(w, dim, kernel);
    h.reserve(steps);
    for (int m = 0; m < steps; ++m) {
      h.push(x);
      h.evaluate(out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(steps) * (steps + 1) / 2 * dim);
}

void BM_HistorySerial(benchmark::State& s) { run_history(s, HistoryKernel::Serial); }
void BM_HistoryBlocked(benchmark::State& s) { run_history(s, HistoryKernel::Blocked); }

void history_args(benchmark::internal::Benchmark* b) {
  b->Args({99, 4000})->Args({961, 1000})->Args({9025, 320})->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_HistorySerial)->Apply(history_args);
BENCHMARK(BM_HistoryBlocked)->Apply(history_args);

void run_cq(benchmark::State& state, HistoryKernel kernel) {
  const Mesh mesh = Mesh::interval(100);
  const FemOperators ops(mesh);
  ProblemSpec spec;
  spec.domain = DomainKind::Interval;
  spec.alpha = 0.5;
  spec.initial = XSin2PiX{};
  const auto v = l2_project(mesh, XSin2PiX{}, 2);
  CqOptions opt;
  opt.keep_all = false;
  opt.kernel = kernel;
  for (auto _ : state) {
    auto traj = solve_cq<double>(spec, ops, FemKind::Galerkin, v.values, 2,
                                 static_cast<int>(state.range(0)), false, opt);
    benchmark::DoNotOptimize(traj.final().data());
  }
}

void BM_CqSerial(benchmark::State& s) { run_cq(s, HistoryKernel::Serial); }
void BM_CqBlocked(benchmark::State& s) { run_cq(s, HistoryKernel::Blocked); }

BENCHMARK(BM_CqSerial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CqBlocked)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
