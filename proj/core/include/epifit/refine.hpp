#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "epifit/models.hpp"
#include "epifit/nn.hpp"
#include "epifit/solver.hpp"

namespace epifit {

/// Physics-informed refinement settings. A dense tanh surrogate maps scaled
/// time tau in [0, 1] to normalized states; its data mismatch and the model's
/// dynamics residual are minimized jointly in the parameters.
struct RefineConfig {
    std::vector<int> hidden_sizes = {64, 64, 64, 64};
    int n_collocation = 0; ///< 0 reuses the observation grid length
    int steps = 20000;     ///< joint surrogate + parameter steps
    int pretrain_steps = 2000; ///< data-only surrogate steps run first
    double lr = 1e-3;
    double weight_data = 1.0;
    double weight_physics = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    int log_every = 100;
};

/// Smooth box constraint: value = lo + (hi - lo) * sigmoid(raw), so any raw
/// real maps strictly inside [lo, hi]. encode inverts it, first clamping the
/// value 1e-6 of the box width inside the boundaries to keep the logit
/// finite.
double decode_bounded(double raw, double lo, double hi);
double decode_bounded_grad(double raw, double lo, double hi); ///< d value / d raw
double encode_bounded(double value, double lo, double hi);

/// Dense tanh network in double precision. w[i], b[i] map layer i-1
/// activations (the scalar tau for i = 0) to layer i; the final pair is the
/// linear output map onto the normalized states.
struct Surrogate {
    std::vector<Mat<double>> w, b;

    /// Fixed enumeration (w[0], b[0], w[1], b[1], ...); gradients and Adam
    /// state follow this order.
    std::vector<Mat<double>*> leaves();
    std::vector<const Mat<double>*> leaves() const;
};

/// Uniform +-1/sqrt(fan_in) initialization, deterministic in the seed.
Surrogate init_surrogate(const std::vector<int>& hidden_sizes, int output_dim,
                         std::uint64_t seed);
Surrogate zeros_like(const Surrogate& s);

/// Normalized surrogate states at a row of scaled times: output_dim x M.
Eigen::MatrixXd surrogate_states(const Surrogate& s, const Eigen::RowVectorXd& taus);

/// States plus exact d(state)/d(tau) columns, by tangent propagation.
void surrogate_states_and_rates(const Surrogate& s, const Eigen::RowVectorXd& taus,
                                Eigen::MatrixXd& u, Eigen::MatrixXd& du);

/// Affine map between normalized surrogate outputs and model state units:
/// state_c = ch_min[c] + ch_range[c] * u_c.
struct RefineScale {
    std::vector<double> ch_min, ch_range;
};

/// Per-channel min/width of the observed trajectory; a constant channel gets
/// width 1 so the map stays invertible.
RefineScale trajectory_scale(const Eigen::MatrixXd& states);

/// Mean squared mismatch between surrogate states at `taus` and `targets`
/// (output_dim x M, normalized units). Adds d(loss)/d(weights) into *grads
/// when grads is non-null.
double surrogate_data_loss(const Surrogate& s, const Eigen::RowVectorXd& taus,
                           const Eigen::MatrixXd& targets, Surrogate* grads);

/// Mean squared dynamics residual at the collocation points: per channel c,
/// r_c = du_c/dtau - t_horizon * f_c(y(u), p) / ch_range[c] with y the
/// denormalized surrogate state. When grads / param_grads are given, adds
/// the exact gradients w.r.t. the surrogate weights and the parameter
/// values (param_grads must have n_params entries).
double surrogate_physics_loss(const Surrogate& s, const Eigen::RowVectorXd& taus,
                              const ModelSpec& spec, std::span<const double> params,
                              const RefineScale& scale, double t_horizon,
                              Surrogate* grads, std::span<double> param_grads);

/// One logged point of a refinement run. Steps count from 0 across the
/// pretrain and joint phases; losses are measured before that step's update.
struct RefineHistoryRow {
    int step;
    double data_loss;
    double physics_loss;
    double total_loss; ///< weight_data * data + weight_physics * physics
};

struct RefineResult {
    /// Parameters at the joint-phase step with the lowest total loss.
    std::vector<double> params;
    std::vector<double> initial_params;
    std::vector<RefineHistoryRow> history;
    int best_step = -1;
    double best_total = 0.0;
    bool diverged = false;
};

/// Fits the surrogate to the observed trajectory (pretrain phase), then
/// descends data + physics loss jointly in the surrogate weights and the
/// box-constrained parameters, starting from initial_params. Deterministic
/// for a given config.
RefineResult refine(const ModelSpec& spec, const Trajectory& traj,
                    std::span<const double> initial_params, const RefineConfig& config);

} // namespace epifit
