#include "epifit/solver.hpp"

#include <algorithm>

#include "epifit/serialize.hpp"

namespace epifit {

namespace {

constexpr char kTrajMagic[8] = {'E', 'P', 'I', 'F', 'I', 'T', 'T', 'J'};
constexpr std::uint32_t kTrajVersion = 1;

double rms_scaled(std::span<const double> v, std::span<const double> sc) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double q = v[i] / sc[i];
        s += q * q;
    }
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Starting step selection following the usual two-evaluation heuristic:
/// compare the solution and derivative scales, probe an explicit Euler step,
/// and bound the result by the curvature estimate.
double initial_step(const std::function<void(double, const double*, double*)>& rhs,
                    std::span<const double> y0, std::span<const double> f0,
                    double t_horizon, double rel_tol, double abs_tol) {
    const std::size_t n = y0.size();
    std::vector<double> sc(n);
    for (std::size_t i = 0; i < n; ++i) sc[i] = abs_tol + rel_tol * std::abs(y0[i]);

    double d0 = rms_scaled(y0, sc);
    double d1 = rms_scaled(f0, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
    h0 = std::min(h0, t_horizon);

    std::vector<double> y1(n), f1(n), df(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
    rhs(h0, y1.data(), f1.data());
    for (std::size_t i = 0; i < n; ++i) df[i] = f1[i] - f0[i];
    double d2 = rms_scaled(df, sc) / h0;

    double dm = std::max(d1, d2);
    double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                              : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, t_horizon});
}

} // namespace

Eigen::MatrixXd integrate_grid(const std::function<void(double, const double*, double*)>& rhs,
                               std::span<const double> y0, double t_horizon, int n_out,
                               const SolverConfig& config) {
    if (!(t_horizon > 0.0)) throw Error("t_horizon must be positive");
    if (n_out < 2) throw Error("need at least 2 output grid points");
    if (!(config.rel_tol > 0.0) || !(config.abs_tol > 0.0)) {
        throw Error("tolerances must be positive");
    }
    const std::size_t n = y0.size();
    for (double v : y0) {
        if (!std::isfinite(v)) throw DimensionError("non-finite initial state entry");
    }
    const double h_min = (config.h_min > 0.0) ? config.h_min : 1e-12 * t_horizon;
    if (!(h_min < t_horizon)) throw Error("h_min must be below t_horizon");

    Eigen::MatrixXd out(n_out, static_cast<Eigen::Index>(n));
    const double grid_h = t_horizon / static_cast<double>(n_out - 1);

    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> y_next(n), stages(7 * n);
    std::span<double> k1(stages.data(), n);
    std::span<double> k7(stages.data() + 6 * n, n);

    rhs(0.0, y.data(), k1.data());
    for (double v : k1) {
        if (!std::isfinite(v)) {
            throw SolverError(SolverError::Kind::NonFinite,
                              "non-finite derivative at the initial state");
        }
    }

    for (std::size_t i = 0; i < n; ++i) out(0, static_cast<Eigen::Index>(i)) = y[i];
    int next_grid = 1;

    double t = 0.0;
    double h = (config.h_init > 0.0) ? std::min(config.h_init, t_horizon)
                                     : initial_step(rhs, y, k1, t_horizon,
                                                    config.rel_tol, config.abs_tol);
    h = std::max(h, h_min);

    // PI controller state: err_prev carries the previous accepted error so
    // step growth reacts to the error trend, not just its last value.
    double err_prev = 1e-4;
    std::uint64_t steps = 0;

    while (next_grid < n_out) {
        if (steps++ >= config.max_steps) {
            throw SolverError(SolverError::Kind::MaxSteps,
                              "exceeded " + std::to_string(config.max_steps) +
                                  " steps at t = " + std::to_string(t));
        }
        bool last = (t + h >= t_horizon);
        if (last) h = t_horizon - t;

        double err;
        try {
            err = step_dp54(rhs, y, t, h,
                            config.rel_tol, config.abs_tol, y_next, stages);
        } catch (const SolverError& e) {
            if (e.kind != SolverError::Kind::NonFinite) throw;
            // Blow-up inside the trial step: treat it like a hard rejection
            // and retry smaller until the floor turns it into a failure.
            h *= 0.1;
            if (h < h_min) {
                throw SolverError(SolverError::Kind::StepUnderflow,
                                  "step size underflow at t = " + std::to_string(t) +
                                      " (stiff-or-singular problem)");
            }
            continue;
        }

        if (err <= 1.0) {
            // Accepted. Fill every grid point inside (t, t+h] by cubic
            // Hermite interpolation: exact at both step ends, O(h^4) inside.
            double t_new = last ? t_horizon : t + h;
            while (next_grid < n_out) {
                double tg = (next_grid == n_out - 1) ? t_horizon
                                                     : grid_h * static_cast<double>(next_grid);
                if (tg > t_new && !last) break;
                double th = (tg - t) / h;
                double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
                double h10 = th * (1.0 - th) * (1.0 - th);
                double h01 = th * th * (3.0 - 2.0 * th);
                double h11 = th * th * (th - 1.0);
                for (std::size_t i = 0; i < n; ++i) {
                    out(next_grid, static_cast<Eigen::Index>(i)) =
                        h00 * y[i] + h10 * h * k1[i] + h01 * y_next[i] + h11 * h * k7[i];
                }
                ++next_grid;
            }

            t = t_new;
            std::swap_ranges(y.begin(), y.end(), y_next.begin());
            std::copy(k7.begin(), k7.end(), k1.begin()); // FSAL
            double fac = (err == 0.0)
                             ? 5.0
                             : 0.9 * std::pow(err, -0.17) * std::pow(err_prev, 0.04);
            h *= std::clamp(fac, 0.1, 5.0);
            err_prev = std::max(err, 1e-4);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
        }
        if (h < h_min && next_grid < n_out) {
            throw SolverError(SolverError::Kind::StepUnderflow,
                              "step size underflow at t = " + std::to_string(t) +
                                  " (stiff-or-singular problem)");
        }
    }
    return out;
}

Trajectory integrate(const ModelSpec& spec, std::span<const double> params,
                     std::span<const double> y0, const SolverConfig& config) {
    if (y0.size() != spec.n_states()) {
        throw DimensionError("initial state has " + std::to_string(y0.size()) +
                             " entries, " + spec.model_id + " has " +
                             std::to_string(spec.n_states()) + " compartments");
    }
    if (params.size() != spec.n_params()) {
        throw DimensionError("parameter vector has " + std::to_string(params.size()) +
                             " entries, " + spec.model_id + " has " +
                             std::to_string(spec.n_params()) + " parameters");
    }
    for (double v : params) {
        if (!std::isfinite(v)) throw DimensionError("non-finite parameter entry");
    }

    std::vector<double> consts = spec.constant_values();
    const double* p = params.data();
    const double* c = consts.data();
    RhsFnD f = spec.rhs_d;
    auto rhs = [f, p, c](double, const double* yv, double* dy) { f(yv, p, c, dy); };

    Trajectory traj;
    traj.model_id = spec.model_id;
    traj.states = integrate_grid(rhs, y0, spec.t_horizon, spec.n_samples, config);
    traj.t_grid.resize(spec.n_samples);
    const double grid_h = spec.t_horizon / static_cast<double>(spec.n_samples - 1);
    for (int i = 0; i < spec.n_samples; ++i) {
        traj.t_grid[i] = (i == spec.n_samples - 1) ? spec.t_horizon
                                                   : grid_h * static_cast<double>(i);
    }
    return traj;
}

Trajectory integrate(const ModelSpec& spec, std::span<const double> params,
                     const SolverConfig& config) {
    return integrate(spec, params, spec.y0_default, config);
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.write_magic(kTrajMagic);
    w.write_u32(kTrajVersion);
    w.write_string(traj.model_id);
    w.write_u64(traj.t_grid.size());
    w.write_u64(static_cast<std::uint64_t>(traj.states.cols()));
    w.write_f64_array(traj.t_grid.data(), traj.t_grid.size());
    for (Eigen::Index r = 0; r < traj.states.rows(); ++r) {
        for (Eigen::Index cc = 0; cc < traj.states.cols(); ++cc) {
            w.write_f64(traj.states(r, cc));
        }
    }
    w.close();
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kTrajMagic);
    std::uint32_t version = r.read_u32();
    if (version != kTrajVersion) {
        throw FormatError("'" + path.string() + "' has trajectory format version " +
                              std::to_string(version) + ", expected " +
                              std::to_string(kTrajVersion),
                          r.offset() - sizeof(std::uint32_t));
    }
    Trajectory traj;
    traj.model_id = r.read_string();
    std::uint64_t rows = r.read_u64();
    std::uint64_t cols = r.read_u64();
    traj.t_grid.resize(rows);
    r.read_f64_array(traj.t_grid.data(), rows);
    traj.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::uint64_t i = 0; i < rows; ++i) {
        for (std::uint64_t j = 0; j < cols; ++j) {
            traj.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                r.read_f64();
        }
    }
    return traj;
}

} // namespace epifit
