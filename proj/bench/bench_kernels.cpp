// Serial reference vs OpenMP kernels: rollout collection, greedy evaluation
// and the mutual-information quadrature.

#include <benchmark/benchmark.h>

#include "hiemp/gc_actor_critic.hpp"
#include "hiemp/oracle.hpp"
#include "hiemp/phase2.hpp"

namespace {

using namespace hiemp;

Agent field_agent(int levels) {
  Rng rng(7);
  std::vector<LevelSpec> specs(static_cast<std::size_t>(levels));
  for (auto& s : specs) s.n = 10;
  return make_agent(make_preset("point_field_2d"), specs, TrainParams{}, rng);
}

Exec mode(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_GcRollouts(benchmark::State& state) {
  const Agent agent = field_agent(2);
  const std::vector<State> starts(64, nominal_start(agent.env));
  const GoalSampler sampler = noisy_goal_space_sampler(agent, 1);
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(collect_gc_rollouts(agent, 1, starts, sampler, rng, nullptr, mode(state)));
  }
}
BENCHMARK(BM_GcRollouts)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  Agent agent = field_agent(1);
  Rng rng(3);
  TaskSpec task{Vec::Zero(2), Vec::Constant(2, 1.0), 10, 0.3};
  (void)attach_task_level(agent, task, rng);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(agent, 100, {0}, mode(state)));
}
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Quadrature(benchmark::State& state) {
  MiChannel ch{BoxParams{Vec::Zero(1), Vec::Zero(1)}, [](double z) { return 0.8 * z; }, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(exact_mi_quadrature(ch, {}, mode(state)));
}
BENCHMARK(BM_Quadrature)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
