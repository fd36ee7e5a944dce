#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "epifit/dataset.hpp"
#include "epifit/nn.hpp"

namespace epifit {

/// Architecture of the sequence regressor: stacked LSTM layers over the
/// trajectory time steps, the final-time hidden states of all layers
/// concatenated, then ReLU dense layers and a linear output.
struct RegressorConfig {
    int n_layers = 2;
    int hidden = 256;
    std::vector<int> dense_sizes = {64, 64};
    int input_dim = 0;  ///< = n_states of the model
    int output_dim = 0; ///< = n_params of the model
    std::uint64_t seed = 0;

    friend bool operator==(const RegressorConfig&, const RegressorConfig&) = default;
};

/// Optimization schedule. The learning rate at epoch e is exactly
/// lr_init * decay_factor^floor(e / decay_every). An epoch is one full pass
/// over the training split in shuffled mini-batches; batch <= 0 selects
/// full-batch.
struct TrainConfig {
    double lr_init = 1e-3;
    int epochs = 60000;
    double decay_factor = 0.1;
    int decay_every = 20000;
    int batch = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    int jobs = 1;       ///< worker threads; results are independent of this
    int log_every = 100;
};

/// Learning rate applied during (0-indexed) epoch e.
inline double lr_at_epoch(const TrainConfig& tc, int epoch) {
    return tc.lr_init *
           std::pow(tc.decay_factor, static_cast<double>(epoch / tc.decay_every));
}

/// One logged point of a training run. wall_seconds is elapsed time since
/// the start of train() and is the only non-deterministic field.
struct HistoryRow {
    int epoch;
    double train_loss;
    double val_loss;
    double lr;
    double wall_seconds;
};
using TrainHistory = std::vector<HistoryRow>;

template <typename S>
struct LstmLayerT {
    Mat<S> W; ///< 4H x in, gate rows ordered input, forget, cell, output
    Mat<S> R; ///< 4H x H recurrent
    Mat<S> b; ///< 4H x 1
};

/// All trainable arrays. Scalar-templated: float is the training type,
/// double backs the finite-difference gradient verification.
template <typename S>
struct RegressorWeightsT {
    RegressorConfig config;
    std::vector<LstmLayerT<S>> layers;
    std::vector<Mat<S>> dense_w, dense_b;
    Mat<S> out_w, out_b;

    /// Fixed enumeration of every trainable array (layer W/R/b in layer
    /// order, then dense pairs, then the output pair). Gradient containers,
    /// Adam state and the container format all follow this order.
    std::vector<Mat<S>*> leaves();
    std::vector<const Mat<S>*> leaves() const;
};

using RegressorWeights = RegressorWeightsT<float>;

/// A mini-batch packed for the recurrence: x[t] is input_dim x B holding
/// every example's normalized state at time step t; targets is
/// output_dim x B of range-scaled parameters.
template <typename S>
struct PackedBatchT {
    std::vector<Mat<S>> x;
    Mat<S> targets;
};

/// Deterministic initialization: every array uniform in +-1/sqrt(fan_in),
/// then the forget-gate bias rows are set to exactly 1.
template <typename S>
RegressorWeightsT<S> init_weights_t(const RegressorConfig& config);
RegressorWeights init_weights(const RegressorConfig& config);

/// Weight-shaped container of zeros, the gradient accumulator.
template <typename S>
RegressorWeightsT<S> zeros_like(const RegressorWeightsT<S>& w);

/// Batched forward pass: returns output_dim x B of range-scaled estimates.
template <typename S>
Mat<S> forward_batch(const RegressorWeightsT<S>& w, const std::vector<Mat<S>>& x);

/// Single-trajectory forward pass over an already normalized trajectory
/// (n_samples x input_dim). Returns the range-scaled estimate.
std::vector<double> forward(const RegressorWeights& w, const Eigen::MatrixXd& normalized);

/// Mean-squared-error loss over the batch plus gradients for every weight,
/// computed by backpropagation through time over the full sequence.
/// `grads` must be zeros_like(w) (or an accumulator to add into).
template <typename S>
double loss_and_grad(const RegressorWeightsT<S>& w, const PackedBatchT<S>& batch,
                     RegressorWeightsT<S>& grads);

struct TrainResult {
    RegressorWeights weights;
    TrainHistory history;
    bool diverged = false;
};

/// Adam training on the TrainConfig schedule. Logs train/validation loss
/// every log_every epochs and after the final epoch. On a non-finite loss
/// the run aborts and returns the history so far with diverged set.
TrainResult train(const Dataset& ds, const RegressorConfig& rc, const TrainConfig& tc);

/// Everything inference needs: weights plus the frozen normalization
/// statistics and the grid length the regressor was trained on.
struct TrainedRegressor {
    RegressorWeights weights;
    NormStats norm;
    std::string model_id;
    int n_samples = 0;
};

/// normalize -> forward -> unscale. The trajectory must have the training
/// grid length and channel count.
std::vector<double> infer(const TrainedRegressor& reg, const Trajectory& traj);

/// Weights container IO (magic "EPIFITWT", versioned, little-endian f64).
/// save also writes a JSON sidecar at path + ".json". Round trips are
/// bit-exact; wrong magic/version or inconsistent shapes raise FormatError.
void save_regressor(const TrainedRegressor& reg, const std::filesystem::path& path);
TrainedRegressor load_regressor(const std::filesystem::path& path);

} // namespace epifit
