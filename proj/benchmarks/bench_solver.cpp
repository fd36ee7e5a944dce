// Forward-integration throughput: the cost of one trajectory, per model and
// per tolerance. Dataset generation is this loop times the example count, so
// these numbers bound generation throughput directly.
#include <benchmark/benchmark.h>

#include <vector>

#include <epifit/models.hpp>
#include <epifit/rng.hpp>
#include <epifit/solver.hpp>

namespace {

void integrate_model(benchmark::State& state, const char* model_id) {
    const epifit::ModelSpec& m = epifit::find_model(model_id);
    std::vector<double> params = epifit::sample_params(m, 42);
    epifit::SolverConfig cfg;
    for (auto _ : state) {
        epifit::Trajectory traj = epifit::integrate(m, params, cfg);
        benchmark::DoNotOptimize(traj.states.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void covid_at_tolerance(benchmark::State& state) {
    const epifit::ModelSpec& m = epifit::find_model("covid");
    std::vector<double> params = {0.32, 0.05, 0.03};
    epifit::SolverConfig cfg;
    cfg.rel_tol = std::pow(10.0, -state.range(0));
    cfg.abs_tol = cfg.rel_tol * 1e-2;
    for (auto _ : state) {
        epifit::Trajectory traj = epifit::integrate(m, params, cfg);
        benchmark::DoNotOptimize(traj.states.data());
    }
    state.SetItemsProcessed(state.iterations());
}

} // namespace

BENCHMARK_CAPTURE(integrate_model, covid, "covid");
BENCHMARK_CAPTURE(integrate_model, hiv, "hiv");
BENCHMARK_CAPTURE(integrate_model, tuberculosis, "tuberculosis");
BENCHMARK_CAPTURE(integrate_model, dengue, "dengue");
BENCHMARK_CAPTURE(integrate_model, ebola, "ebola");
BENCHMARK_CAPTURE(integrate_model, anthrax, "anthrax");
BENCHMARK_CAPTURE(integrate_model, polio, "polio");
BENCHMARK_CAPTURE(integrate_model, measles, "measles");

// Tolerance exponent 6 -> rel_tol 1e-6, etc.
BENCHMARK(covid_at_tolerance)->Arg(6)->Arg(8)->Arg(10);

BENCHMARK_MAIN();
