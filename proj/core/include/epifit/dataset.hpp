#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "epifit/models.hpp"
#include "epifit/solver.hpp"

namespace epifit {

/// How many labeled examples to generate per split and how to solve them.
struct DatasetConfig {
    std::string model_id;
    int n_train = 9000;
    int n_val = 500;
    int n_test = 500;
    std::uint64_t master_seed = 0;
    SolverConfig solver;
    /// Optional overrides of the model's default grid (0 keeps the default).
    double t_horizon = 0.0;
    int n_samples = 0;

    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

/// Frozen scaling statistics: per-channel trajectory min/max computed over
/// the training split only, and per-parameter bounds from the descriptors.
/// A constant channel is flagged degenerate and widened to max = min + 1 so
/// normalization stays defined.
struct NormStats {
    std::vector<double> ch_min, ch_max;
    std::vector<std::uint8_t> ch_degenerate;
    std::vector<double> p_lo, p_hi;

    std::size_t n_channels() const { return ch_min.size(); }
    std::size_t n_params() const { return p_lo.size(); }

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// One labeled example: the generating parameters and the solved states
/// (n_samples x n_states; the grid is shared dataset-wide).
struct Example {
    std::vector<double> params;
    Eigen::MatrixXd states;

    friend bool operator==(const Example& a, const Example& b) {
        return a.params == b.params && a.states == b.states;
    }
};

/// Labeled (trajectory -> parameters) dataset with train/val/test splits.
struct Dataset {
    std::uint32_t format_version = 0;
    DatasetConfig config;
    std::vector<double> t_grid;
    std::vector<Example> train, val, test;
    NormStats norm;
    /// How many examples had to be redrawn because integration failed.
    std::uint64_t n_resampled = 0;

    const ModelSpec& spec() const { return find_model(config.model_id); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Generates all splits by forward solves over uniformly sampled parameter
/// boxes. Example i of a split draws from seed derive(master_seed, split, i);
/// an integration failure redraws from a retry stream up to 10 times before
/// failing hard. Deterministic for a given config.
Dataset generate_dataset(const DatasetConfig& config);

/// Per channel c: x' = (x - min_c)/(max_c - min_c). Training-split values
/// land in [0, 1]; validation/test values may leave that interval and are
/// not clipped.
Eigen::MatrixXd normalize_trajectory(const Eigen::MatrixXd& states, const NormStats& norm);

/// Exact affine inverse of normalize_trajectory.
Eigen::MatrixXd denormalize_trajectory(const Eigen::MatrixXd& normalized,
                                       const NormStats& norm);

/// Maps parameters onto the unit box via their descriptor ranges.
std::vector<double> scale_params(std::span<const double> params, const NormStats& norm);

/// Exact affine inverse of scale_params.
std::vector<double> unscale_params(std::span<const double> scaled, const NormStats& norm);

/// Dataset container IO (magic "EPIFITDS", versioned, little-endian f64,
/// row-major matrices). save also writes a human-readable JSON sidecar at
/// path + ".json". Round trips are bit-exact; wrong magic, a newer version,
/// or truncation raise FormatError (with byte offset).
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace epifit
