#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "epifit/dataset.hpp"
#include "epifit/lstm.hpp"
#include "epifit/metrics.hpp"
#include "epifit/models.hpp"
#include "epifit/refine.hpp"
#include "epifit/rng.hpp"
#include "epifit/solver.hpp"

#include "plot.hpp"

namespace {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Deterministic training log: epoch, losses and learning rate only. Wall
/// times go to a separate file so canonical outputs stay byte-reproducible.
void write_history_csv(const epifit::TrainHistory& history,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw epifit::Error("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_loss,val_loss,lr\n";
    for (const auto& row : history) {
        out << row.epoch << "," << fmt17(row.train_loss) << "," << fmt17(row.val_loss)
            << "," << fmt17(row.lr) << "\n";
    }
}

void write_timing_csv(const epifit::TrainHistory& history,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw epifit::Error("cannot open '" + path.string() + "' for writing");
    out << "epoch,wall_seconds\n";
    for (const auto& row : history) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", row.wall_seconds);
        out << row.epoch << "," << buf << "\n";
    }
}

void write_refine_history_csv(const std::vector<epifit::RefineHistoryRow>& history,
                              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw epifit::Error("cannot open '" + path.string() + "' for writing");
    out << "step,data_loss,physics_loss,total_loss\n";
    for (const auto& row : history) {
        out << row.step << "," << fmt17(row.data_loss) << "," << fmt17(row.physics_loss)
            << "," << fmt17(row.total_loss) << "\n";
    }
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw epifit::Error("cannot open '" + path.string() + "' for writing");
    out << text;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    write_text_file(j.dump(2) + "\n", path);
}

json params_to_json(const epifit::ModelSpec& spec, const std::vector<double>& params) {
    json j = json::object();
    for (std::size_t k = 0; k < spec.n_params(); ++k) {
        j[spec.params[k].name] = params[k];
    }
    return j;
}

std::vector<double> parse_params(const epifit::ModelSpec& spec,
                                 const std::vector<double>& values) {
    if (values.size() != spec.n_params()) {
        throw epifit::Error(spec.model_id + " takes " + std::to_string(spec.n_params()) +
                            " parameters, got " + std::to_string(values.size()));
    }
    return values;
}

const std::vector<epifit::Example>& pick_split(const epifit::Dataset& ds,
                                               const std::string& split) {
    if (split == "train") return ds.train;
    if (split == "val") return ds.val;
    return ds.test;
}

epifit::EvalReport eval_regressor(const epifit::TrainedRegressor& reg,
                                  const epifit::Dataset& ds, const std::string& split,
                                  std::vector<double>* wall_out) {
    const epifit::ModelSpec& spec = ds.spec();
    const auto& examples = pick_split(ds, split);
    if (examples.empty()) throw epifit::Error("split '" + split + "' is empty");
    std::vector<epifit::EstimatePair> pairs;
    std::vector<double> wall;
    pairs.reserve(examples.size());
    for (const auto& ex : examples) {
        epifit::Trajectory traj{ds.config.model_id, ds.t_grid, ex.states};
        auto t0 = std::chrono::steady_clock::now();
        std::vector<double> pred = epifit::infer(reg, traj);
        wall.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        pairs.push_back({std::move(pred), ex.params});
    }
    if (wall_out != nullptr) *wall_out = wall;
    // The report itself stays timing-free so identical runs are
    // byte-identical; callers that want latency read wall_out.
    return epifit::evaluate(spec, pairs);
}

struct GenerateFlags {
    std::string model, out;
    int n_train = 2000, n_val = 200, n_test = 200;
    std::uint64_t seed = 0;
    double rel_tol = 1e-8, abs_tol = 1e-10, t_horizon = 0.0;
    int n_samples = 0;
    bool full_scale = false;
};

void add_generate_flags(CLI::App* cmd, GenerateFlags& g, bool with_out) {
    cmd->add_option("--model", g.model, "Model id (see `epifit models`)")->required();
    if (with_out) {
        cmd->add_option("--out", g.out, "Output dataset container path")->required();
    }
    cmd->add_option("--train", g.n_train, "Training examples")->capture_default_str();
    cmd->add_option("--val", g.n_val, "Validation examples")->capture_default_str();
    cmd->add_option("--test", g.n_test, "Test examples")->capture_default_str();
    cmd->add_option("--seed", g.seed, "Master seed for all randomness")
        ->capture_default_str();
    cmd->add_option("--rel-tol", g.rel_tol, "Solver relative tolerance")
        ->capture_default_str();
    cmd->add_option("--abs-tol", g.abs_tol, "Solver absolute tolerance")
        ->capture_default_str();
    cmd->add_option("--t-horizon", g.t_horizon, "Override the model's time horizon")
        ->capture_default_str();
    cmd->add_option("--n-samples", g.n_samples, "Override the model's grid length")
        ->capture_default_str();
}

epifit::DatasetConfig dataset_config_from(const GenerateFlags& g, const CLI::App* cmd) {
    GenerateFlags eff = g;
    if (g.full_scale) {
        // Full-scale run: any size the user left unset moves to the
        // full-scale default.
        if (cmd->count("--train") == 0) eff.n_train = 9000;
        if (cmd->count("--val") == 0) eff.n_val = 500;
        if (cmd->count("--test") == 0) eff.n_test = 500;
    }
    epifit::DatasetConfig config;
    config.model_id = eff.model;
    config.n_train = eff.n_train;
    config.n_val = eff.n_val;
    config.n_test = eff.n_test;
    config.master_seed = eff.seed;
    config.solver.rel_tol = eff.rel_tol;
    config.solver.abs_tol = eff.abs_tol;
    config.t_horizon = eff.t_horizon;
    config.n_samples = eff.n_samples;
    return config;
}

struct TrainFlags {
    std::string dataset, out, history;
    int hidden = 64, layers = 2;
    std::vector<int> dense = {64, 64};
    int epochs = 3000, batch = 200;
    double lr = 1e-3, decay_factor = 0.1;
    int decay_every = 1000;
    std::uint64_t seed = 0;
    int jobs = 1, log_every = 100;
    bool full_scale = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& t, bool with_io) {
    if (with_io) {
        cmd->add_option("--dataset", t.dataset, "Dataset container to train on")
            ->required();
        cmd->add_option("--out", t.out, "Output weights container path")->required();
        cmd->add_option("--history", t.history,
                        "Training log CSV path (default: <out>.history.csv)");
    }
    cmd->add_option("--hidden", t.hidden, "LSTM hidden width")->capture_default_str();
    cmd->add_option("--layers", t.layers, "LSTM layer count")->capture_default_str();
    cmd->add_option("--dense", t.dense, "Dense head sizes, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch", t.batch, "Mini-batch size (0 = full batch)")
        ->capture_default_str();
    cmd->add_option("--lr", t.lr, "Initial learning rate")->capture_default_str();
    cmd->add_option("--decay-factor", t.decay_factor, "Learning-rate decay factor")
        ->capture_default_str();
    cmd->add_option("--decay-every", t.decay_every, "Epochs between decays")
        ->capture_default_str();
    cmd->add_option("--jobs", t.jobs, "Worker threads (never changes results)")
        ->capture_default_str();
    cmd->add_option("--log-every", t.log_every, "Epochs between history rows")
        ->capture_default_str();
}

void apply_full_scale(TrainFlags& t, const CLI::App* cmd) {
    if (!t.full_scale) return;
    if (cmd->count("--hidden") == 0) t.hidden = 256;
    if (cmd->count("--epochs") == 0) t.epochs = 60000;
    if (cmd->count("--decay-every") == 0) t.decay_every = 20000;
    if (cmd->count("--batch") == 0) t.batch = 0;
}

struct TrainOutputs {
    epifit::TrainedRegressor reg;
    epifit::TrainHistory history;
};

TrainOutputs run_training(const epifit::Dataset& ds, const TrainFlags& t,
                          std::uint64_t seed) {
    epifit::RegressorConfig rc;
    rc.n_layers = t.layers;
    rc.hidden = t.hidden;
    rc.dense_sizes = t.dense;
    rc.seed = epifit::derive_seed(seed, "regressor-init");
    epifit::TrainConfig tc;
    tc.lr_init = t.lr;
    tc.epochs = t.epochs;
    tc.decay_factor = t.decay_factor;
    tc.decay_every = t.decay_every;
    tc.batch = t.batch;
    tc.seed = epifit::derive_seed(seed, "train");
    tc.jobs = t.jobs;
    tc.log_every = t.log_every;

    epifit::TrainResult result = epifit::train(ds, rc, tc);
    if (result.diverged) {
        throw epifit::Error("training diverged (non-finite loss); see the history log");
    }
    TrainOutputs out;
    out.reg = {std::move(result.weights), ds.norm, ds.config.model_id,
               static_cast<int>(ds.t_grid.size())};
    out.history = std::move(result.history);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"epifit: learn epidemic-model coefficients from simulated outbreak "
                 "trajectories"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value config file ([subcommand] sections); command-line flags "
                   "take precedence");
    app.get_formatter()->column_width(34);

    // models ----------------------------------------------------------------
    auto* models_cmd =
        app.add_subcommand("models", "List registered disease models or print one card");
    std::string models_id;
    bool models_json = false;
    models_cmd->add_option("--id", models_id, "Print the full card of this model");
    models_cmd->add_flag("--json", models_json, "Machine-readable output");
    models_cmd->callback([&] {
        if (!models_id.empty()) {
            const epifit::ModelSpec& spec = epifit::find_model(models_id);
            if (models_json) {
                std::cout << epifit::model_card_json(spec).dump(2) << "\n";
            } else {
                std::cout << epifit::model_card_text(spec);
            }
            return;
        }
        if (models_json) {
            json rows = json::array();
            for (const auto& m : epifit::list_models()) {
                rows.push_back({{"model_id", m.model_id},
                                {"tier", m.tier},
                                {"n_states", m.n_states},
                                {"n_params", m.n_params}});
            }
            std::cout << rows.dump(2) << "\n";
            return;
        }
        std::printf("%-14s %4s %7s %7s\n", "model", "tier", "states", "params");
        for (const auto& m : epifit::list_models()) {
            std::printf("%-14s %4d %7zu %7zu\n", m.model_id.c_str(), m.tier, m.n_states,
                        m.n_params);
        }
    });

    // simulate ----------------------------------------------------------------
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Integrate one model forward and write a trajectory container");
    struct {
        std::string model, out;
        std::vector<double> params, y0;
        double rel_tol = 1e-8, abs_tol = 1e-10, t_horizon = 0.0;
        int n_samples = 0;
    } sim;
    sim_cmd->add_option("--model", sim.model, "Model id")->required();
    sim_cmd->add_option("--params", sim.params, "Parameter values, comma separated")
        ->delimiter(',')
        ->required();
    sim_cmd->add_option("--out", sim.out, "Output trajectory container path")->required();
    sim_cmd->add_option("--y0", sim.y0, "Initial state override, comma separated")
        ->delimiter(',');
    sim_cmd->add_option("--rel-tol", sim.rel_tol, "Solver relative tolerance")
        ->capture_default_str();
    sim_cmd->add_option("--abs-tol", sim.abs_tol, "Solver absolute tolerance")
        ->capture_default_str();
    sim_cmd->add_option("--t-horizon", sim.t_horizon, "Override the model's time horizon")
        ->capture_default_str();
    sim_cmd->add_option("--n-samples", sim.n_samples, "Override the model's grid length")
        ->capture_default_str();
    sim_cmd->callback([&] {
        epifit::ModelSpec spec = epifit::find_model(sim.model);
        if (sim.t_horizon > 0.0) spec.t_horizon = sim.t_horizon;
        if (sim.n_samples > 0) spec.n_samples = sim.n_samples;
        epifit::SolverConfig config;
        config.rel_tol = sim.rel_tol;
        config.abs_tol = sim.abs_tol;
        std::vector<double> params = parse_params(spec, sim.params);
        epifit::Trajectory traj =
            sim.y0.empty() ? epifit::integrate(spec, params, config)
                           : epifit::integrate(spec, params, sim.y0, config);
        epifit::save_trajectory(traj, sim.out);
        std::cout << "wrote " << sim.out << " (" << traj.n_samples() << " x "
                  << traj.n_states() << ")\n";
    });

    // generate ----------------------------------------------------------------
    auto* gen_cmd = app.add_subcommand(
        "generate", "Sample parameters and solve trajectories into a dataset container");
    GenerateFlags gen;
    add_generate_flags(gen_cmd, gen, true);
    gen_cmd->add_flag("--full-scale", gen.full_scale,
                      "Full-scale sizes (9000/500/500) for flags left unset");
    gen_cmd->callback([&] {
        epifit::DatasetConfig config = dataset_config_from(gen, gen_cmd);
        epifit::Dataset ds = epifit::generate_dataset(config);
        epifit::save_dataset(ds, gen.out);
        std::cout << "wrote " << gen.out << " (" << ds.train.size() << "/" << ds.val.size()
                  << "/" << ds.test.size() << " examples, " << ds.n_resampled
                  << " resampled)\n";
    });

    // train ----------------------------------------------------------------
    auto* train_cmd =
        app.add_subcommand("train", "Fit the sequence regressor on a dataset container");
    TrainFlags tr;
    add_train_flags(train_cmd, tr, true);
    train_cmd->add_option("--seed", tr.seed, "Master seed for all randomness")
        ->capture_default_str();
    train_cmd->add_flag("--full-scale", tr.full_scale,
                        "Full-scale training (hidden 256, 60000 epochs) for flags left "
                        "unset");
    train_cmd->callback([&] {
        apply_full_scale(tr, train_cmd);
        epifit::Dataset ds = epifit::load_dataset(tr.dataset);
        TrainOutputs out = run_training(ds, tr, tr.seed);
        epifit::save_regressor(out.reg, tr.out);
        std::filesystem::path history =
            tr.history.empty() ? std::filesystem::path(tr.out + ".history.csv")
                               : std::filesystem::path(tr.history);
        write_history_csv(out.history, history);
        write_timing_csv(out.history, history.string() + ".timing.csv");
        const auto& last = out.history.back();
        std::cout << "wrote " << tr.out << "\nfinal train loss " << last.train_loss
                  << ", val loss " << last.val_loss << " after " << last.epoch
                  << " epochs\n";
    });

    // infer ----------------------------------------------------------------
    auto* infer_cmd = app.add_subcommand(
        "infer", "Estimate generating parameters for one trajectory container");
    struct {
        std::string weights, traj, out;
        bool as_json = false;
    } inf;
    infer_cmd->add_option("--weights", inf.weights, "Weights container")->required();
    infer_cmd->add_option("--traj", inf.traj, "Trajectory container")->required();
    infer_cmd->add_option("--out", inf.out, "Also write the estimate as JSON here");
    infer_cmd->add_flag("--json", inf.as_json, "Print JSON instead of text");
    infer_cmd->callback([&] {
        auto t0 = std::chrono::steady_clock::now();
        epifit::TrainedRegressor reg = epifit::load_regressor(inf.weights);
        epifit::Trajectory traj = epifit::load_trajectory(inf.traj);
        std::vector<double> params = epifit::infer(reg, traj);
        double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const epifit::ModelSpec& spec = epifit::find_model(reg.model_id);
        json j = {{"model_id", reg.model_id}, {"params", params_to_json(spec, params)}};
        if (inf.as_json) {
            std::cout << j.dump(2) << "\n";
        } else {
            for (std::size_t k = 0; k < spec.n_params(); ++k) {
                std::cout << spec.params[k].name << " = " << fmt17(params[k]) << "\n";
            }
        }
        if (!inf.out.empty()) write_json_file(j, inf.out);
        std::cerr << "inference wall time: " << wall << " s\n";
    });

    // refine ----------------------------------------------------------------
    auto* refine_cmd = app.add_subcommand(
        "refine", "Physics-informed refinement of a parameter estimate for one trajectory");
    struct {
        std::string traj, weights, out, history;
        std::vector<double> init;
        epifit::RefineConfig config;
    } rf;
    refine_cmd->add_option("--traj", rf.traj, "Trajectory container")->required();
    auto* init_opt = refine_cmd->add_option("--init", rf.init,
                                            "Initial parameter values, comma separated")
                         ->delimiter(',');
    auto* weights_opt = refine_cmd->add_option(
        "--weights", rf.weights, "Weights container; its estimate seeds the refinement");
    init_opt->excludes(weights_opt);
    weights_opt->excludes(init_opt);
    refine_cmd->add_option("--out", rf.out, "Write the refined estimate as JSON here");
    refine_cmd->add_option("--history", rf.history, "Loss history CSV path");
    refine_cmd->add_option("--steps", rf.config.steps, "Joint refinement steps")
        ->capture_default_str();
    refine_cmd
        ->add_option("--pretrain-steps", rf.config.pretrain_steps,
                     "Data-only surrogate steps run first")
        ->capture_default_str();
    refine_cmd
        ->add_option("--collocation", rf.config.n_collocation,
                     "Collocation points (0 = grid length)")
        ->capture_default_str();
    refine_cmd->add_option("--lr", rf.config.lr, "Learning rate")->capture_default_str();
    refine_cmd->add_option("--weight-data", rf.config.weight_data, "Data loss weight")
        ->capture_default_str();
    refine_cmd
        ->add_option("--weight-physics", rf.config.weight_physics, "Physics loss weight")
        ->capture_default_str();
    refine_cmd->add_option("--seed", rf.config.seed, "Master seed for all randomness")
        ->capture_default_str();
    refine_cmd->add_option("--log-every", rf.config.log_every, "Steps between history rows")
        ->capture_default_str();
    refine_cmd->callback([&] {
        epifit::Trajectory traj = epifit::load_trajectory(rf.traj);
        const epifit::ModelSpec& spec = epifit::find_model(traj.model_id);
        std::vector<double> init;
        if (!rf.init.empty()) {
            init = parse_params(spec, rf.init);
        } else if (!rf.weights.empty()) {
            epifit::TrainedRegressor reg = epifit::load_regressor(rf.weights);
            init = epifit::infer(reg, traj);
        } else {
            throw epifit::Error("refine needs --init or --weights");
        }
        epifit::RefineResult result = epifit::refine(spec, traj, init, rf.config);
        if (result.diverged) {
            throw epifit::Error("refinement diverged (non-finite loss)");
        }
        json j = {{"model_id", spec.model_id},
                  {"initial", params_to_json(spec, result.initial_params)},
                  {"refined", params_to_json(spec, result.params)},
                  {"best_step", result.best_step},
                  {"best_total_loss", result.best_total}};
        std::cout << j.dump(2) << "\n";
        if (!rf.out.empty()) write_json_file(j, rf.out);
        if (!rf.history.empty()) write_refine_history_csv(result.history, rf.history);
    });

    // eval ----------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand(
        "eval", "Score a trained regressor against a dataset split");
    struct {
        std::string weights, dataset, split = "test", out;
        bool timing = false;
    } ev;
    eval_cmd->add_option("--weights", ev.weights, "Weights container")->required();
    eval_cmd->add_option("--dataset", ev.dataset, "Dataset container")->required();
    eval_cmd->add_option("--split", ev.split, "Split to score")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    eval_cmd->add_option("--out", ev.out, "Write the report as JSON here");
    eval_cmd->add_flag("--timing", ev.timing,
                       "Print per-task inference latency to stderr");
    eval_cmd->callback([&] {
        epifit::TrainedRegressor reg = epifit::load_regressor(ev.weights);
        epifit::Dataset ds = epifit::load_dataset(ev.dataset);
        std::vector<double> wall;
        epifit::EvalReport report = eval_regressor(reg, ds, ev.split, &wall);
        std::cout << epifit::report_text(report);
        if (!ev.out.empty()) write_json_file(epifit::report_json(report), ev.out);
        if (ev.timing && !wall.empty()) {
            double sum = 0.0, mx = 0.0;
            for (double w : wall) {
                sum += w;
                mx = std::max(mx, w);
            }
            std::cerr << "inference wall time: mean " << sum / wall.size() << " s, max "
                      << mx << " s\n";
        }
    });

    // plot ----------------------------------------------------------------
    auto* plot_cmd = app.add_subcommand(
        "plot", "Render trajectory channels as SVG line plots with CSV data");
    struct {
        std::string traj, overlay, out;
        std::vector<int> channels;
        std::string label_a = "true", label_b = "estimate";
    } pl;
    plot_cmd->add_option("--traj", pl.traj, "Trajectory container")->required();
    plot_cmd->add_option("--overlay", pl.overlay,
                         "Second trajectory drawn against the first (shared grid)");
    plot_cmd->add_option("--out", pl.out, "Output directory")->required();
    plot_cmd->add_option("--channels", pl.channels,
                         "Channel indices, comma separated (default: all)")
        ->delimiter(',');
    plot_cmd->add_option("--label-a", pl.label_a, "Legend label of the first trajectory")
        ->capture_default_str();
    plot_cmd->add_option("--label-b", pl.label_b, "Legend label of the overlay")
        ->capture_default_str();
    plot_cmd->callback([&] {
        epifit::Trajectory traj = epifit::load_trajectory(pl.traj);
        epifit::Trajectory overlay;
        bool have_overlay = !pl.overlay.empty();
        if (have_overlay) overlay = epifit::load_trajectory(pl.overlay);
        std::vector<int> channels = pl.channels;
        if (channels.empty()) {
            for (int c = 0; c < static_cast<int>(traj.n_states()); ++c) {
                channels.push_back(c);
            }
        }
        auto written = epifit::cli::emit_plot(traj, have_overlay ? &overlay : nullptr,
                                              channels, pl.out, pl.label_a, pl.label_b);
        for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
    });

    // pipeline ----------------------------------------------------------------
    auto* pipe_cmd = app.add_subcommand(
        "pipeline", "generate -> train -> eval in one run, writing every artifact");
    GenerateFlags pgen;
    TrainFlags ptr;
    std::string pipe_out;
    bool pipe_full = false;
    add_generate_flags(pipe_cmd, pgen, false);
    add_train_flags(pipe_cmd, ptr, false);
    pipe_cmd->add_option("--out", pipe_out, "Output directory")->required();
    pipe_cmd->add_flag("--full-scale", pipe_full,
                       "Full-scale dataset and training for flags left unset");
    pipe_cmd->callback([&] {
        pgen.full_scale = pipe_full;
        ptr.full_scale = pipe_full;
        apply_full_scale(ptr, pipe_cmd);
        std::filesystem::path dir(pipe_out);
        std::filesystem::create_directories(dir);

        epifit::DatasetConfig config = dataset_config_from(pgen, pipe_cmd);
        epifit::Dataset ds = epifit::generate_dataset(config);
        epifit::save_dataset(ds, dir / "dataset.bin");
        std::cout << "wrote " << (dir / "dataset.bin").string() << "\n";

        TrainOutputs out = run_training(ds, ptr, pgen.seed);
        epifit::save_regressor(out.reg, dir / "weights.bin");
        write_history_csv(out.history, dir / "history.csv");
        write_timing_csv(out.history, dir / "timing.csv");
        std::cout << "wrote " << (dir / "weights.bin").string() << "\n";

        epifit::EvalReport report = eval_regressor(out.reg, ds, "test", nullptr);
        std::string text = epifit::report_text(report);
        write_json_file(epifit::report_json(report), dir / "report.json");
        write_text_file(text, dir / "report.txt");
        std::cout << "wrote " << (dir / "report.json").string() << "\n" << text;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
