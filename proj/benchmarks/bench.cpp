#include "mflab/adaptive.hpp"
#include "mflab/config.hpp"
#include "mflab/environment.hpp"
#include "mflab/model.hpp"
#include "mflab/sac.hpp"

#include <benchmark/benchmark.h>

using namespace mflab;

namespace {

ExperimentConfig amp_pfp() { return ExperimentConfig::defaults_for(Regime::AmpPfp); }

void BM_SteadyStateSolve(benchmark::State& state) {
    const ModelParams p = amp_pfp().resolved_params();
    for (auto _ : state) {
        const InflationRoots roots = solve_steady_inflation(p);
        benchmark::DoNotOptimize(compute_steady_state(roots.pi_low, p));
    }
}
BENCHMARK(BM_SteadyStateSolve);

void BM_EnvStep(benchmark::State& state) {
    const ExperimentConfig cfg = amp_pfp();
    const ModelParams p = cfg.resolved_params();
    Environment env(p, cfg.action_bounds, cfg.init_box, false, 7);
    env.reset();
    const Action a = steady_actions(cfg.anchor());
    for (auto _ : state) {
        benchmark::DoNotOptimize(env.step(a));
    }
}
BENCHMARK(BM_EnvStep);

void BM_TemporaryEquilibrium(benchmark::State& state) {
    const ExperimentConfig cfg = amp_pfp();
    const ModelParams p = cfg.resolved_params();
    const SteadyState ss = cfg.anchor();
    const Beliefs bel{ss.pi, ss.b, ss.y};
    const PrevState prev{ss.m, ss.b, ss.R};
    const Shocks sh{};
    for (auto _ : state) {
        benchmark::DoNotOptimize(temporary_equilibrium(bel, prev, sh, p));
    }
}
BENCHMARK(BM_TemporaryEquilibrium);

void BM_ActorForward(benchmark::State& state) {
    const ExperimentConfig cfg = amp_pfp();
    AgentConfig ac;
    ac.bounds = cfg.action_bounds;
    Agent agent(ac, 7);
    Eigen::VectorXd obs = Eigen::VectorXd::Constant(8, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(agent.act(obs, ActMode::Exploit));
    }
}
BENCHMARK(BM_ActorForward);

void BM_AgentUpdate(benchmark::State& state) {
    const ExperimentConfig cfg = amp_pfp();
    AgentConfig ac;
    ac.bounds = cfg.action_bounds;
    Agent agent(ac, 7);
    ReplayBuffer buffer(4096);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1024; ++i) {
        Transition t;
        t.obs = Eigen::VectorXd::NullaryExpr(8, [&] { return u(rng); });
        t.act = Eigen::VectorXd::NullaryExpr(3, [&] { return u(rng); });
        t.next_obs = Eigen::VectorXd::NullaryExpr(8, [&] { return u(rng); });
        t.reward = -1.0 + 0.01 * u(rng);
        t.done = false;
        buffer.push(t);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(agent.update(buffer.sample(256, rng)));
    }
}
BENCHMARK(BM_AgentUpdate);

} // namespace

BENCHMARK_MAIN();
