#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "epifit/common.hpp"
#include "epifit/models.hpp"

namespace epifit {

/// Tolerances and safety limits for adaptive integration.
struct SolverConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double h_init = 0.0;         ///< 0 selects an automatic starting step
    double h_min = 0.0;          ///< 0 selects 1e-12 * t_horizon
    std::uint64_t max_steps = 1'000'000;

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Compartment populations on a uniform time grid. `states` is
/// n_samples x n_states with one row per grid point.
struct Trajectory {
    std::string model_id;
    std::vector<double> t_grid;
    Eigen::MatrixXd states;

    std::size_t n_samples() const { return t_grid.size(); }
    std::size_t n_states() const { return static_cast<std::size_t>(states.cols()); }
};

/// One embedded Dormand-Prince 5(4) step from (t, y) with step size h.
/// `stages` is scratch for the seven stage derivatives (each n long,
/// contiguous, 7*n total); on entry stages[0..n) must hold f(t, y) and on
/// exit stages[6*n..7*n) holds f(t+h, y_next), which the caller reuses as
/// the next step's first stage (FSAL).
///
/// y_next receives the 5th-order solution. The return value is the weighted
/// RMS norm of the embedded 5th-4th order difference with per-component
/// scale abs_tol + rel_tol*max(|y_i|, |y_next_i|); a value <= 1 means the
/// step passes the tolerance. Throws SolverError(NonFinite) when any stage
/// or the error estimate stops being finite (blow-up).
template <typename Rhs>
double step_dp54(Rhs&& rhs, std::span<const double> y, double t, double h,
                 double rel_tol, double abs_tol, std::span<double> y_next,
                 std::span<double> stages) {
    // Butcher tableau of the Dormand-Prince 5(4) pair. b5 equals the last
    // row of a, giving the first-same-as-last property; e = b5 - b4 weights
    // the embedded error estimate.
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t n = y.size();
    double* k1 = stages.data();
    double* k2 = k1 + n;
    double* k3 = k2 + n;
    double* k4 = k3 + n;
    double* k5 = k4 + n;
    double* k6 = k5 + n;
    double* k7 = k6 + n;
    double* yt = y_next.data(); // doubles as the stage-state buffer

    for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a21 * k1[i]);
    rhs(t + c2 * h, yt, k2);
    for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, yt, k3);
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, yt, k4);
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, yt, k5);
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
    rhs(t + h, yt, k6);
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, yt, k7);

    double err_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double diff = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                           e7 * k7[i]);
        double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(yt[i]));
        double q = diff / sc;
        err_sq += q * q;
    }
    double err = std::sqrt(err_sq / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(yt[i])) {
            throw SolverError(SolverError::Kind::NonFinite,
                              "non-finite stage at t = " + std::to_string(t) +
                                  " (solution blow-up)");
        }
    }
    if (!std::isfinite(err)) {
        throw SolverError(SolverError::Kind::NonFinite,
                          "non-finite error estimate at t = " + std::to_string(t));
    }
    return err;
}

/// Integrates an arbitrary right-hand side over [0, t_horizon], returning
/// states at `n_out` uniform grid points (t_0 = 0 inclusive of both ends).
/// rhs signature: void(double t, const double* y, double* dy).
///
/// Steps are chosen by a PI controller (safety 0.9, growth capped at x5,
/// shrinkage at x0.1); grid values come from cubic Hermite interpolation
/// over each accepted step, so output times are exactly the requested grid.
Eigen::MatrixXd integrate_grid(const std::function<void(double, const double*, double*)>& rhs,
                               std::span<const double> y0, double t_horizon, int n_out,
                               const SolverConfig& config);

/// Integrates a registered model from y0 over its (or the overridden)
/// horizon. Parameter values are not range-checked here so that
/// counterfactual runs (e.g. a transmission rate of zero) stay expressible.
Trajectory integrate(const ModelSpec& spec, std::span<const double> params,
                     std::span<const double> y0, const SolverConfig& config);

/// integrate() with the model's default initial state.
Trajectory integrate(const ModelSpec& spec, std::span<const double> params,
                     const SolverConfig& config);

/// Trajectory container IO (magic "EPIFITTJ", versioned, little-endian).
/// Round trips are bit-exact.
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

} // namespace epifit
