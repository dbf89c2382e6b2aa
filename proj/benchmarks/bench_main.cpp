// Microbenchmarks for the hot paths: graph sampling, gradient estimation,
// nuclear-norm subgradients and full simulated rollouts.

#include <benchmark/benchmark.h>

#include <commdrop/graph_sample.hpp>
#include <commdrop/nuclear.hpp>
#include <commdrop/rollout.hpp>
#include <commdrop/rng.hpp>
#include <commdrop/synthetic.hpp>
#include <commdrop/train.hpp>

namespace {

using namespace commdrop;

TeamSpec bench_team(int agents, int rounds) {
    TeamSpec team;
    team.rounds = rounds;
    for (int i = 0; i < agents; ++i)
        team.agents.push_back(make_profile("agent-" + std::to_string(i),
                                           "Role " + std::to_string(i)));
    return team;
}

void bm_dag_sample(benchmark::State& state) {
    TeamSpec team = bench_team(int(state.range(0)), int(state.range(1)));
    AdjacencySet adj = init_adjacency(team);
    uint64_t seed = 0;
    for (auto _ : state) {
        GraphSample sample = dag_sample(adj, seed++, LikelihoodMode::Paper);
        benchmark::DoNotOptimize(sample.log_prob);
    }
}
BENCHMARK(bm_dag_sample)->Args({5, 2})->Args({8, 4});

void bm_policy_gradient(benchmark::State& state) {
    TeamSpec team = bench_team(6, 3);
    AdjacencySet adj = init_adjacency(team);
    TrainConfig cfg;
    cfg.likelihood = LikelihoodMode::Bernoulli;
    std::vector<ScoredSample> batch;
    for (int m = 0; m < 10; ++m)
        batch.push_back({dag_sample(adj, uint64_t(m), cfg.likelihood), 0.5 + 0.04 * m});
    for (auto _ : state) {
        GradientSet grad = estimate_policy_gradient(adj, batch, GradientTarget::IntraAndInter, cfg);
        benchmark::DoNotOptimize(grad.intra.front().data.data());
    }
}
BENCHMARK(bm_policy_gradient);

void bm_nuclear_subgradient(benchmark::State& state) {
    Matrix m(8, 8);
    Rng rng(17);
    for (auto& v : m.data) v = rng.next_unit();
    for (auto _ : state) {
        Matrix g = nuclear_subgradient(m);
        benchmark::DoNotOptimize(g.data.data());
    }
}
BENCHMARK(bm_nuclear_subgradient);

void bm_simulated_rollout(benchmark::State& state) {
    SyntheticTaskSpec spec;
    for (int i = 0; i < 5; ++i) {
        SimulatedAgentSpec agent;
        agent.agent_id = "agent-" + std::to_string(i);
        agent.behavior = SimBehavior::Oracle;
        agent.reliability = 0.75;
        agent.influence = 0.5;
        spec.agent_specs.push_back(agent);
    }
    spec.instance_count = 4;
    PlantedTask task = make_planted_task(spec, 7);
    TeamSpec team = bench_team(5, 2);
    AdjacencySet adj = init_adjacency(team);
    GraphSample sample = dag_sample(adj, 3, LikelihoodMode::Paper);
    for (auto _ : state) {
        RolloutRecord record = run_rollout(sample, team, *task.backend, task.instances[0],
                                           task.kind, AggregationMode::DecisionAgent);
        benchmark::DoNotOptimize(record.utility);
    }
}
BENCHMARK(bm_simulated_rollout);

} // namespace

BENCHMARK_MAIN();
