#include "epifit/dataset.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "epifit/rng.hpp"
#include "epifit/serialize.hpp"

namespace epifit {

namespace {

constexpr char kDatasetMagic[8] = {'E', 'P', 'I', 'F', 'I', 'T', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;
constexpr int kMaxResamples = 10;

ModelSpec effective_spec(const DatasetConfig& config) {
    ModelSpec spec = find_model(config.model_id);
    if (config.t_horizon > 0.0) spec.t_horizon = config.t_horizon;
    if (config.n_samples > 0) spec.n_samples = config.n_samples;
    return spec;
}

void generate_split(const ModelSpec& spec, const DatasetConfig& config,
                    const char* split_name, int count, std::vector<Example>& out,
                    std::uint64_t& n_resampled) {
    out.resize(count);
    for (int i = 0; i < count; ++i) {
        std::uint64_t base = derive_seed(config.master_seed, split_name,
                                         static_cast<std::uint64_t>(i));
        bool done = false;
        for (int attempt = 0; attempt <= kMaxResamples; ++attempt) {
            std::uint64_t seed =
                (attempt == 0) ? base
                               : derive_seed(base, "retry", static_cast<std::uint64_t>(attempt));
            std::vector<double> params = sample_params(spec, seed);
            try {
                Trajectory traj = integrate(spec, params, config.solver);
                out[i].params = std::move(params);
                out[i].states = std::move(traj.states);
                done = true;
                break;
            } catch (const SolverError&) {
                ++n_resampled;
            }
        }
        if (!done) {
            throw Error(std::string("integration failed ") +
                        std::to_string(kMaxResamples + 1) + " times for " + split_name +
                        " example " + std::to_string(i) + " of " + spec.model_id);
        }
    }
}

NormStats compute_norm(const ModelSpec& spec, const std::vector<Example>& train) {
    NormStats norm;
    const std::size_t n_ch = spec.n_states();
    norm.ch_min.assign(n_ch, std::numeric_limits<double>::infinity());
    norm.ch_max.assign(n_ch, -std::numeric_limits<double>::infinity());
    norm.ch_degenerate.assign(n_ch, 0);
    for (const auto& ex : train) {
        for (std::size_t c = 0; c < n_ch; ++c) {
            auto col = ex.states.col(static_cast<Eigen::Index>(c));
            norm.ch_min[c] = std::min(norm.ch_min[c], col.minCoeff());
            norm.ch_max[c] = std::max(norm.ch_max[c], col.maxCoeff());
        }
    }
    for (std::size_t c = 0; c < n_ch; ++c) {
        if (!(norm.ch_max[c] > norm.ch_min[c])) {
            norm.ch_max[c] = norm.ch_min[c] + 1.0;
            norm.ch_degenerate[c] = 1;
        }
    }
    for (const auto& p : spec.params) {
        norm.p_lo.push_back(p.range_lo);
        norm.p_hi.push_back(p.range_hi);
    }
    return norm;
}

void write_norm(BinaryWriter& w, const NormStats& norm) {
    w.write_u64(norm.n_channels());
    w.write_f64_array(norm.ch_min.data(), norm.ch_min.size());
    w.write_f64_array(norm.ch_max.data(), norm.ch_max.size());
    for (auto d : norm.ch_degenerate) w.write_u32(d);
    w.write_u64(norm.n_params());
    w.write_f64_array(norm.p_lo.data(), norm.p_lo.size());
    w.write_f64_array(norm.p_hi.data(), norm.p_hi.size());
}

NormStats read_norm(BinaryReader& r) {
    NormStats norm;
    std::uint64_t n_ch = r.read_u64();
    norm.ch_min.resize(n_ch);
    norm.ch_max.resize(n_ch);
    norm.ch_degenerate.resize(n_ch);
    r.read_f64_array(norm.ch_min.data(), n_ch);
    r.read_f64_array(norm.ch_max.data(), n_ch);
    for (std::uint64_t i = 0; i < n_ch; ++i) {
        norm.ch_degenerate[i] = static_cast<std::uint8_t>(r.read_u32());
    }
    std::uint64_t n_p = r.read_u64();
    norm.p_lo.resize(n_p);
    norm.p_hi.resize(n_p);
    r.read_f64_array(norm.p_lo.data(), n_p);
    r.read_f64_array(norm.p_hi.data(), n_p);
    return norm;
}

void write_split(BinaryWriter& w, const std::vector<Example>& split) {
    w.write_u64(split.size());
    for (const auto& ex : split) {
        w.write_u64(ex.params.size());
        w.write_f64_array(ex.params.data(), ex.params.size());
        w.write_u64(static_cast<std::uint64_t>(ex.states.rows()));
        w.write_u64(static_cast<std::uint64_t>(ex.states.cols()));
        for (Eigen::Index r = 0; r < ex.states.rows(); ++r) {
            for (Eigen::Index c = 0; c < ex.states.cols(); ++c) {
                w.write_f64(ex.states(r, c));
            }
        }
    }
}

std::vector<Example> read_split(BinaryReader& r) {
    std::uint64_t count = r.read_u64();
    std::vector<Example> split(count);
    for (auto& ex : split) {
        std::uint64_t n_p = r.read_u64();
        ex.params.resize(n_p);
        r.read_f64_array(ex.params.data(), n_p);
        std::uint64_t rows = r.read_u64();
        std::uint64_t cols = r.read_u64();
        ex.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::uint64_t i = 0; i < rows; ++i) {
            for (std::uint64_t j = 0; j < cols; ++j) {
                ex.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    r.read_f64();
            }
        }
    }
    return split;
}

} // namespace

Dataset generate_dataset(const DatasetConfig& config) {
    if (config.n_train < 1 || config.n_val < 1 || config.n_test < 1) {
        throw Error("all split counts must be at least 1");
    }
    ModelSpec spec = effective_spec(config);

    Dataset ds;
    ds.format_version = kDatasetVersion;
    ds.config = config;
    ds.t_grid.resize(spec.n_samples);
    const double grid_h = spec.t_horizon / static_cast<double>(spec.n_samples - 1);
    for (int i = 0; i < spec.n_samples; ++i) {
        ds.t_grid[i] = (i == spec.n_samples - 1) ? spec.t_horizon
                                                 : grid_h * static_cast<double>(i);
    }

    generate_split(spec, config, "train", config.n_train, ds.train, ds.n_resampled);
    generate_split(spec, config, "val", config.n_val, ds.val, ds.n_resampled);
    generate_split(spec, config, "test", config.n_test, ds.test, ds.n_resampled);
    ds.norm = compute_norm(spec, ds.train);
    return ds;
}

Eigen::MatrixXd normalize_trajectory(const Eigen::MatrixXd& states, const NormStats& norm) {
    if (static_cast<std::size_t>(states.cols()) != norm.n_channels()) {
        throw DimensionError("trajectory has " + std::to_string(states.cols()) +
                             " channels, normalization stats have " +
                             std::to_string(norm.n_channels()));
    }
    Eigen::MatrixXd out = states;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        double lo = norm.ch_min[static_cast<std::size_t>(c)];
        double hi = norm.ch_max[static_cast<std::size_t>(c)];
        out.col(c) = (out.col(c).array() - lo) / (hi - lo);
    }
    return out;
}

Eigen::MatrixXd denormalize_trajectory(const Eigen::MatrixXd& normalized,
                                       const NormStats& norm) {
    if (static_cast<std::size_t>(normalized.cols()) != norm.n_channels()) {
        throw DimensionError("trajectory has " + std::to_string(normalized.cols()) +
                             " channels, normalization stats have " +
                             std::to_string(norm.n_channels()));
    }
    Eigen::MatrixXd out = normalized;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        double lo = norm.ch_min[static_cast<std::size_t>(c)];
        double hi = norm.ch_max[static_cast<std::size_t>(c)];
        out.col(c) = out.col(c).array() * (hi - lo) + lo;
    }
    return out;
}

std::vector<double> scale_params(std::span<const double> params, const NormStats& norm) {
    if (params.size() != norm.n_params()) {
        throw DimensionError("parameter vector has " + std::to_string(params.size()) +
                             " entries, scaling stats have " +
                             std::to_string(norm.n_params()));
    }
    std::vector<double> out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        out[i] = (params[i] - norm.p_lo[i]) / (norm.p_hi[i] - norm.p_lo[i]);
    }
    return out;
}

std::vector<double> unscale_params(std::span<const double> scaled, const NormStats& norm) {
    if (scaled.size() != norm.n_params()) {
        throw DimensionError("parameter vector has " + std::to_string(scaled.size()) +
                             " entries, scaling stats have " +
                             std::to_string(norm.n_params()));
    }
    std::vector<double> out(scaled.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        out[i] = scaled[i] * (norm.p_hi[i] - norm.p_lo[i]) + norm.p_lo[i];
    }
    return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.write_magic(kDatasetMagic);
    w.write_u32(ds.format_version);
    w.write_string(ds.config.model_id);
    w.write_u64(static_cast<std::uint64_t>(ds.config.n_train));
    w.write_u64(static_cast<std::uint64_t>(ds.config.n_val));
    w.write_u64(static_cast<std::uint64_t>(ds.config.n_test));
    w.write_u64(ds.config.master_seed);
    w.write_f64(ds.config.solver.rel_tol);
    w.write_f64(ds.config.solver.abs_tol);
    w.write_f64(ds.config.solver.h_init);
    w.write_f64(ds.config.solver.h_min);
    w.write_u64(ds.config.solver.max_steps);
    w.write_f64(ds.config.t_horizon);
    w.write_u64(static_cast<std::uint64_t>(ds.config.n_samples));
    w.write_u64(ds.t_grid.size());
    w.write_f64_array(ds.t_grid.data(), ds.t_grid.size());
    write_norm(w, ds.norm);
    write_split(w, ds.train);
    write_split(w, ds.val);
    write_split(w, ds.test);
    w.write_u64(ds.n_resampled);
    w.close();

    nlohmann::json sidecar;
    sidecar["format"] = "epifit dataset";
    sidecar["format_version"] = ds.format_version;
    sidecar["model_id"] = ds.config.model_id;
    sidecar["n_train"] = ds.config.n_train;
    sidecar["n_val"] = ds.config.n_val;
    sidecar["n_test"] = ds.config.n_test;
    sidecar["master_seed"] = ds.config.master_seed;
    sidecar["solver"] = {{"rel_tol", ds.config.solver.rel_tol},
                         {"abs_tol", ds.config.solver.abs_tol},
                         {"h_init", ds.config.solver.h_init},
                         {"h_min", ds.config.solver.h_min},
                         {"max_steps", ds.config.solver.max_steps}};
    sidecar["t_horizon_override"] = ds.config.t_horizon;
    sidecar["n_samples_override"] = ds.config.n_samples;
    sidecar["n_grid_points"] = ds.t_grid.size();
    sidecar["n_resampled"] = ds.n_resampled;
    std::ofstream side(path.string() + ".json");
    side << sidecar.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kDatasetMagic);
    Dataset ds;
    ds.format_version = r.read_u32();
    if (ds.format_version != kDatasetVersion) {
        throw FormatError("'" + path.string() + "' has dataset format version " +
                              std::to_string(ds.format_version) + ", expected " +
                              std::to_string(kDatasetVersion),
                          r.offset() - sizeof(std::uint32_t));
    }
    ds.config.model_id = r.read_string();
    ds.config.n_train = static_cast<int>(r.read_u64());
    ds.config.n_val = static_cast<int>(r.read_u64());
    ds.config.n_test = static_cast<int>(r.read_u64());
    ds.config.master_seed = r.read_u64();
    ds.config.solver.rel_tol = r.read_f64();
    ds.config.solver.abs_tol = r.read_f64();
    ds.config.solver.h_init = r.read_f64();
    ds.config.solver.h_min = r.read_f64();
    ds.config.solver.max_steps = r.read_u64();
    ds.config.t_horizon = r.read_f64();
    ds.config.n_samples = static_cast<int>(r.read_u64());
    std::uint64_t n_grid = r.read_u64();
    ds.t_grid.resize(n_grid);
    r.read_f64_array(ds.t_grid.data(), n_grid);
    ds.norm = read_norm(r);
    ds.train = read_split(r);
    ds.val = read_split(r);
    ds.test = read_split(r);
    ds.n_resampled = r.read_u64();
    return ds;
}

} // namespace epifit
