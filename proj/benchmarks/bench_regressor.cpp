// Regressor arithmetic: single-trajectory inference at desk and full scale,
// and one optimizer step (forward + backward) on a full mini-batch, which is
// the unit of training cost.
#include <benchmark/benchmark.h>

#include <vector>

#include <epifit/dataset.hpp>
#include <epifit/lstm.hpp>
#include <epifit/models.hpp>
#include <epifit/solver.hpp>

namespace {

epifit::Dataset small_dataset() {
    epifit::DatasetConfig dc;
    dc.model_id = "covid";
    dc.n_train = 200;
    dc.n_val = 1;
    dc.n_test = 1;
    dc.master_seed = 7;
    return epifit::generate_dataset(dc);
}

epifit::RegressorConfig config_for(const epifit::Dataset& ds, int hidden) {
    epifit::RegressorConfig rc;
    rc.hidden = hidden;
    rc.input_dim = static_cast<int>(ds.norm.ch_min.size());
    rc.output_dim = static_cast<int>(ds.norm.p_lo.size());
    rc.seed = 3;
    return rc;
}

void inference(benchmark::State& state) {
    static const epifit::Dataset ds = small_dataset();
    epifit::RegressorConfig rc = config_for(ds, static_cast<int>(state.range(0)));
    epifit::TrainedRegressor reg{epifit::init_weights_t<float>(rc), ds.norm, "covid",
                                 static_cast<int>(ds.t_grid.size())};
    epifit::Trajectory traj{"covid", ds.t_grid, ds.train.front().states};
    for (auto _ : state) {
        std::vector<double> params = epifit::infer(reg, traj);
        benchmark::DoNotOptimize(params.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void batch_gradient(benchmark::State& state) {
    static const epifit::Dataset ds = small_dataset();
    epifit::RegressorConfig rc = config_for(ds, static_cast<int>(state.range(0)));
    auto w = epifit::init_weights_t<float>(rc);

    // Pack all 200 training examples as one batch (time-major, normalized).
    epifit::PackedBatchT<float> batch;
    const int T = static_cast<int>(ds.t_grid.size());
    const int B = static_cast<int>(ds.train.size());
    batch.x.assign(static_cast<std::size_t>(T),
                   epifit::Mat<float>(rc.input_dim, B));
    batch.targets.resize(rc.output_dim, B);
    for (int b = 0; b < B; ++b) {
        Eigen::MatrixXd norm =
            epifit::normalize_trajectory(ds.train[static_cast<std::size_t>(b)].states,
                                         ds.norm);
        for (int t = 0; t < T; ++t) {
            for (int c = 0; c < rc.input_dim; ++c) {
                batch.x[static_cast<std::size_t>(t)](c, b) =
                    static_cast<float>(norm(t, c));
            }
        }
        std::vector<double> scaled = epifit::scale_params(
            ds.train[static_cast<std::size_t>(b)].params, ds.norm);
        for (int p = 0; p < rc.output_dim; ++p) {
            batch.targets(p, b) = static_cast<float>(scaled[static_cast<std::size_t>(p)]);
        }
    }

    for (auto _ : state) {
        auto grads = epifit::zeros_like(w);
        double loss = epifit::loss_and_grad(w, batch, grads);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grads.layers.data());
    }
    state.SetItemsProcessed(state.iterations() * B);
}

} // namespace

BENCHMARK(inference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(batch_gradient)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
