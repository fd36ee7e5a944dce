#include "epifit/refine.hpp"

#include <cmath>
#include <limits>

#include "epifit/rng.hpp"

namespace epifit {

namespace {

constexpr double kEncodeNudge = 1e-6; ///< fraction of the box width

/// Per-layer records of a tangent-carrying forward pass. a[i] holds layer i
/// activations (a[0] = tau row), adot the d/dtau tangents, zdot the hidden
/// pre-activation tangents (zdot[i] pairs with a[i]).
struct TangentTrace {
    std::vector<Mat<double>> a, adot, zdot;
};

void check_surrogate(const Surrogate& s) {
    if (s.w.empty() || s.w.size() != s.b.size()) {
        throw Error("surrogate has inconsistent layer arrays");
    }
    if (s.w.front().cols() != 1) {
        throw DimensionError("surrogate input layer expects a scalar time");
    }
}

/// Forward pass, optionally with tangents. Returns the output (D x M);
/// fills *udot with d(output)/d(tau) when requested. `trace` may be null
/// when no backward pass will follow.
Eigen::MatrixXd forward_surrogate(const Surrogate& s, const Eigen::RowVectorXd& taus,
                                  bool tangent, Eigen::MatrixXd* udot,
                                  TangentTrace* trace) {
    check_surrogate(s);
    const int n_hidden = static_cast<int>(s.w.size()) - 1;
    Mat<double> a = taus;
    Mat<double> adot;
    if (tangent) adot = Mat<double>::Ones(1, taus.cols());
    if (trace) {
        trace->a.clear();
        trace->adot.clear();
        trace->zdot.assign(static_cast<std::size_t>(n_hidden) + 1, Mat<double>());
        trace->a.push_back(a);
        if (tangent) trace->adot.push_back(adot);
    }
    for (int i = 0; i < n_hidden; ++i) {
        Mat<double> z;
        z.noalias() = s.w[static_cast<std::size_t>(i)] * a;
        z.colwise() += s.b[static_cast<std::size_t>(i)].col(0);
        if (tangent) {
            Mat<double> zdot;
            zdot.noalias() = s.w[static_cast<std::size_t>(i)] * adot;
            a = z.array().tanh().matrix();
            adot = ((1.0 - a.array().square()) * zdot.array()).matrix();
            if (trace) trace->zdot[static_cast<std::size_t>(i) + 1] = std::move(zdot);
        } else {
            a = z.array().tanh().matrix();
        }
        if (trace) {
            trace->a.push_back(a);
            if (tangent) trace->adot.push_back(adot);
        }
    }
    Eigen::MatrixXd u;
    u.noalias() = s.w.back() * a;
    u.colwise() += s.b.back().col(0);
    if (tangent && udot) {
        udot->noalias() = s.w.back() * adot;
    }
    return u;
}

/// Reverse pass matching forward_surrogate. ubar and (for tangent traces)
/// udot_bar seed the output adjoints; gradients accumulate into `g`.
void backward_surrogate(const Surrogate& s, const TangentTrace& trace,
                        const Eigen::MatrixXd& ubar, const Eigen::MatrixXd* udot_bar,
                        Surrogate& g) {
    const int n_hidden = static_cast<int>(s.w.size()) - 1;
    const bool tangent = udot_bar != nullptr;

    const Mat<double>& a_last = trace.a.back();
    g.w.back().noalias() += ubar * a_last.transpose();
    g.b.back().col(0).noalias() += ubar.rowwise().sum();
    Mat<double> abar = s.w.back().transpose() * ubar;
    Mat<double> adot_bar;
    if (tangent) {
        g.w.back().noalias() += (*udot_bar) * trace.adot.back().transpose();
        adot_bar = s.w.back().transpose() * (*udot_bar);
    }
    for (int i = n_hidden - 1; i >= 0; --i) {
        const Mat<double>& a = trace.a[static_cast<std::size_t>(i) + 1];
        const Mat<double>& a_prev = trace.a[static_cast<std::size_t>(i)];
        Eigen::ArrayXXd sq = 1.0 - a.array().square();
        Mat<double> zbar;
        Mat<double> zdot_bar;
        if (tangent) {
            const Mat<double>& zdot = trace.zdot[static_cast<std::size_t>(i) + 1];
            // tanh with tangent: a = tanh(z), adot = s*zdot, s = 1 - a^2.
            // Reverse: zbar = abar*s + adot_bar * zdot * ds/dz, ds/dz = -2*a*s.
            zbar = (abar.array() * sq +
                    adot_bar.array() * (-2.0 * a.array() * sq * zdot.array()))
                       .matrix();
            zdot_bar = (adot_bar.array() * sq).matrix();
        } else {
            zbar = (abar.array() * sq).matrix();
        }
        g.w[static_cast<std::size_t>(i)].noalias() += zbar * a_prev.transpose();
        g.b[static_cast<std::size_t>(i)].col(0).noalias() += zbar.rowwise().sum();
        if (tangent) {
            const Mat<double>& adot_prev = trace.adot[static_cast<std::size_t>(i)];
            g.w[static_cast<std::size_t>(i)].noalias() += zdot_bar * adot_prev.transpose();
            adot_bar = s.w[static_cast<std::size_t>(i)].transpose() * zdot_bar;
        }
        abar = s.w[static_cast<std::size_t>(i)].transpose() * zbar;
    }
}

void fill_uniform(Mat<double>& m, double bound, Rng& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = (2.0 * rng.u01() - 1.0) * bound;
        }
    }
}

} // namespace

double decode_bounded(double raw, double lo, double hi) {
    double sig = 1.0 / (1.0 + std::exp(-raw));
    double v = lo + (hi - lo) * sig;
    // The sigmoid rounds to exactly 0 or 1 once |raw| exceeds ~37; keep the
    // decoded value strictly inside the box even then.
    if (v <= lo) return std::nextafter(lo, hi);
    if (v >= hi) return std::nextafter(hi, lo);
    return v;
}

double decode_bounded_grad(double raw, double lo, double hi) {
    double sig = 1.0 / (1.0 + std::exp(-raw));
    return (hi - lo) * sig * (1.0 - sig);
}

double encode_bounded(double value, double lo, double hi) {
    if (!(hi > lo)) throw Error("encode_bounded needs hi > lo");
    double nudge = kEncodeNudge * (hi - lo);
    double v = std::min(std::max(value, lo + nudge), hi - nudge);
    double u = (v - lo) / (hi - lo);
    return std::log(u / (1.0 - u));
}

std::vector<Mat<double>*> Surrogate::leaves() {
    std::vector<Mat<double>*> out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.push_back(&w[i]);
        out.push_back(&b[i]);
    }
    return out;
}

std::vector<const Mat<double>*> Surrogate::leaves() const {
    std::vector<const Mat<double>*> out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.push_back(&w[i]);
        out.push_back(&b[i]);
    }
    return out;
}

Surrogate init_surrogate(const std::vector<int>& hidden_sizes, int output_dim,
                         std::uint64_t seed) {
    if (output_dim < 1) throw Error("surrogate needs at least one output");
    for (int h : hidden_sizes) {
        if (h < 1) throw Error("surrogate hidden sizes must all be at least 1");
    }
    Surrogate s;
    Rng rng(derive_seed(seed, "surrogate-init"));
    int in = 1;
    for (int h : hidden_sizes) {
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        s.w.push_back(Mat<double>(h, in));
        s.b.push_back(Mat<double>(h, 1));
        fill_uniform(s.w.back(), bound, rng);
        fill_uniform(s.b.back(), bound, rng);
        in = h;
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    s.w.push_back(Mat<double>(output_dim, in));
    s.b.push_back(Mat<double>(output_dim, 1));
    fill_uniform(s.w.back(), bound, rng);
    fill_uniform(s.b.back(), bound, rng);
    return s;
}

Surrogate zeros_like(const Surrogate& s) {
    Surrogate z;
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        z.w.push_back(Mat<double>::Zero(s.w[i].rows(), s.w[i].cols()));
        z.b.push_back(Mat<double>::Zero(s.b[i].rows(), s.b[i].cols()));
    }
    return z;
}

Eigen::MatrixXd surrogate_states(const Surrogate& s, const Eigen::RowVectorXd& taus) {
    return forward_surrogate(s, taus, false, nullptr, nullptr);
}

void surrogate_states_and_rates(const Surrogate& s, const Eigen::RowVectorXd& taus,
                                Eigen::MatrixXd& u, Eigen::MatrixXd& du) {
    u = forward_surrogate(s, taus, true, &du, nullptr);
}

RefineScale trajectory_scale(const Eigen::MatrixXd& states) {
    RefineScale scale;
    const Eigen::Index n_ch = states.cols();
    scale.ch_min.resize(static_cast<std::size_t>(n_ch));
    scale.ch_range.resize(static_cast<std::size_t>(n_ch));
    for (Eigen::Index c = 0; c < n_ch; ++c) {
        double lo = states.col(c).minCoeff();
        double hi = states.col(c).maxCoeff();
        scale.ch_min[static_cast<std::size_t>(c)] = lo;
        scale.ch_range[static_cast<std::size_t>(c)] = (hi > lo) ? (hi - lo) : 1.0;
    }
    return scale;
}

double surrogate_data_loss(const Surrogate& s, const Eigen::RowVectorXd& taus,
                           const Eigen::MatrixXd& targets, Surrogate* grads) {
    if (taus.cols() != targets.cols()) {
        throw DimensionError("data loss needs one target column per tau");
    }
    const double denom = static_cast<double>(targets.rows() * targets.cols());
    if (grads == nullptr) {
        Eigen::MatrixXd u = forward_surrogate(s, taus, false, nullptr, nullptr);
        return (u - targets).squaredNorm() / denom;
    }
    TangentTrace trace;
    Eigen::MatrixXd u = forward_surrogate(s, taus, false, nullptr, &trace);
    Eigen::MatrixXd diff = u - targets;
    Eigen::MatrixXd ubar = diff * (2.0 / denom);
    backward_surrogate(s, trace, ubar, nullptr, *grads);
    return diff.squaredNorm() / denom;
}

double surrogate_physics_loss(const Surrogate& s, const Eigen::RowVectorXd& taus,
                              const ModelSpec& spec, std::span<const double> params,
                              const RefineScale& scale, double t_horizon,
                              Surrogate* grads, std::span<double> param_grads) {
    const int D = static_cast<int>(spec.n_states());
    const int P = static_cast<int>(spec.n_params());
    const int M = static_cast<int>(taus.cols());
    if (static_cast<int>(params.size()) != P) {
        throw DimensionError("physics loss got " + std::to_string(params.size()) +
                             " parameters, " + spec.model_id + " has " + std::to_string(P));
    }
    if (static_cast<int>(scale.ch_min.size()) != D ||
        static_cast<int>(scale.ch_range.size()) != D) {
        throw DimensionError("scale does not match the model's state count");
    }
    const bool want_grads = grads != nullptr;
    if (want_grads && static_cast<int>(param_grads.size()) != P) {
        throw DimensionError("param_grads must have one entry per parameter");
    }

    TangentTrace trace;
    Eigen::MatrixXd udot;
    Eigen::MatrixXd u =
        forward_surrogate(s, taus, true, &udot, want_grads ? &trace : nullptr);

    const std::vector<double> cvals = spec.constant_values();
    const double* cptr = cvals.empty() ? nullptr : cvals.data();
    std::vector<Dual1> yd(static_cast<std::size_t>(D));
    std::vector<Dual1> pd(static_cast<std::size_t>(P));
    std::vector<Dual1> dyd(static_cast<std::size_t>(D));
    Eigen::MatrixXd jac_y(D, D);
    Eigen::MatrixXd jac_p(D, P);
    Eigen::VectorXd f(D);

    const double denom = static_cast<double>(D) * M;
    double loss = 0.0;
    Eigen::MatrixXd ubar, udot_bar;
    if (want_grads) {
        ubar = Eigen::MatrixXd::Zero(D, M);
        udot_bar = Eigen::MatrixXd::Zero(D, M);
    }

    for (int m = 0; m < M; ++m) {
        for (int c = 0; c < D; ++c) {
            yd[static_cast<std::size_t>(c)] =
                Dual1(scale.ch_min[static_cast<std::size_t>(c)] +
                      scale.ch_range[static_cast<std::size_t>(c)] * u(c, m));
        }
        for (int k = 0; k < P; ++k) {
            pd[static_cast<std::size_t>(k)] = Dual1(params[static_cast<std::size_t>(k)]);
        }
        if (want_grads) {
            // One directional evaluation per state and per parameter gives
            // the full Jacobians; state dimension is at most 9 so this stays
            // cheap.
            for (int j = 0; j < D; ++j) {
                yd[static_cast<std::size_t>(j)].d = 1.0;
                spec.rhs_dual(yd.data(), pd.data(), cptr, dyd.data());
                yd[static_cast<std::size_t>(j)].d = 0.0;
                for (int c = 0; c < D; ++c) {
                    jac_y(c, j) = dyd[static_cast<std::size_t>(c)].d;
                    if (j == 0) f(c) = dyd[static_cast<std::size_t>(c)].v;
                }
            }
            for (int k = 0; k < P; ++k) {
                pd[static_cast<std::size_t>(k)].d = 1.0;
                spec.rhs_dual(yd.data(), pd.data(), cptr, dyd.data());
                pd[static_cast<std::size_t>(k)].d = 0.0;
                for (int c = 0; c < D; ++c) jac_p(c, k) = dyd[static_cast<std::size_t>(c)].d;
            }
        } else {
            spec.rhs_dual(yd.data(), pd.data(), cptr, dyd.data());
            for (int c = 0; c < D; ++c) f(c) = dyd[static_cast<std::size_t>(c)].v;
        }

        for (int c = 0; c < D; ++c) {
            const double range_c = scale.ch_range[static_cast<std::size_t>(c)];
            const double r = udot(c, m) - t_horizon * f(c) / range_c;
            loss += r * r / denom;
            if (want_grads) {
                const double rbar = 2.0 * r / denom;
                udot_bar(c, m) = rbar;
                const double v = rbar * t_horizon / range_c;
                for (int cp = 0; cp < D; ++cp) {
                    // y = ch_min + ch_range * u, so dy/du = ch_range.
                    ubar(cp, m) -= v * jac_y(c, cp) * scale.ch_range[static_cast<std::size_t>(cp)];
                }
                for (int k = 0; k < P; ++k) {
                    param_grads[static_cast<std::size_t>(k)] -= v * jac_p(c, k);
                }
            }
        }
    }

    if (want_grads) backward_surrogate(s, trace, ubar, &udot_bar, *grads);
    return loss;
}

RefineResult refine(const ModelSpec& spec, const Trajectory& traj,
                    std::span<const double> initial_params, const RefineConfig& config) {
    const int D = static_cast<int>(spec.n_states());
    const int P = static_cast<int>(spec.n_params());
    if (static_cast<int>(initial_params.size()) != P) {
        throw DimensionError("refine got " + std::to_string(initial_params.size()) +
                             " initial parameters, " + spec.model_id + " has " +
                             std::to_string(P));
    }
    if (static_cast<int>(traj.n_states()) != D) {
        throw DimensionError("trajectory channel count does not match " + spec.model_id);
    }
    if (traj.t_grid.size() < 2) throw Error("refine needs at least two grid points");
    const double t_horizon = traj.t_grid.back();
    if (!(t_horizon > 0.0)) throw Error("refine needs a positive time horizon");

    const int N = static_cast<int>(traj.t_grid.size());
    Eigen::RowVectorXd taus_data(N);
    for (int i = 0; i < N; ++i) taus_data(i) = traj.t_grid[static_cast<std::size_t>(i)] / t_horizon;

    RefineScale scale = trajectory_scale(traj.states);
    Eigen::MatrixXd targets(D, N);
    for (int i = 0; i < N; ++i) {
        for (int c = 0; c < D; ++c) {
            targets(c, i) = (traj.states(i, c) - scale.ch_min[static_cast<std::size_t>(c)]) /
                            scale.ch_range[static_cast<std::size_t>(c)];
        }
    }

    const int M = (config.n_collocation > 0) ? config.n_collocation : N;
    if (M < 2) throw Error("refine needs at least two collocation points");
    Eigen::RowVectorXd taus_colloc(M);
    for (int j = 0; j < M; ++j) {
        taus_colloc(j) = static_cast<double>(j) / static_cast<double>(M - 1);
    }

    RefineResult result;
    result.initial_params.assign(initial_params.begin(), initial_params.end());
    result.best_total = std::numeric_limits<double>::infinity();

    Surrogate s = init_surrogate(config.hidden_sizes, D, config.seed);
    Mat<double> raw(P, 1);
    for (int k = 0; k < P; ++k) {
        raw(k, 0) = encode_bounded(initial_params[static_cast<std::size_t>(k)],
                                   spec.params[static_cast<std::size_t>(k)].range_lo,
                                   spec.params[static_cast<std::size_t>(k)].range_hi);
    }
    auto decode_all = [&](const Mat<double>& r) {
        std::vector<double> p(static_cast<std::size_t>(P));
        for (int k = 0; k < P; ++k) {
            p[static_cast<std::size_t>(k)] =
                decode_bounded(r(k, 0), spec.params[static_cast<std::size_t>(k)].range_lo,
                               spec.params[static_cast<std::size_t>(k)].range_hi);
        }
        return p;
    };
    result.params = decode_all(raw); // fallback when the joint phase never runs

    std::vector<Mat<double>*> weights = s.leaves();
    weights.push_back(&raw);
    Adam<double> opt(config.beta1, config.beta2, config.eps);

    Surrogate g_total = zeros_like(s);
    Mat<double> raw_grad = Mat<double>::Zero(P, 1);
    std::vector<const Mat<double>*> grad_list;
    for (auto* gp : g_total.leaves()) grad_list.push_back(gp);
    grad_list.push_back(&raw_grad);

    Surrogate g_phys = zeros_like(s);
    std::vector<double> p_grad(static_cast<std::size_t>(P));
    const int total_steps = config.pretrain_steps + config.steps;
    const int log_every = std::max(1, config.log_every);

    for (int step = 0; step <= total_steps; ++step) {
        const bool joint = step >= config.pretrain_steps;
        const bool last = step == total_steps;
        const bool log_row = last || (step % log_every == 0);
        std::vector<double> p_now = decode_all(raw);

        for (auto* gp : g_total.leaves()) gp->setZero();
        raw_grad.setZero();
        double ld = surrogate_data_loss(s, taus_data, targets, last ? nullptr : &g_total);

        double lp;
        if (joint && !last) {
            for (auto* gp : g_phys.leaves()) gp->setZero();
            std::fill(p_grad.begin(), p_grad.end(), 0.0);
            lp = surrogate_physics_loss(s, taus_colloc, spec, p_now, scale, t_horizon,
                                        &g_phys, p_grad);
            auto tl = g_total.leaves();
            auto pl = g_phys.leaves();
            for (std::size_t i = 0; i < tl.size(); ++i) {
                *tl[i] = config.weight_data * (*tl[i]) + config.weight_physics * (*pl[i]);
            }
            for (int k = 0; k < P; ++k) {
                raw_grad(k, 0) =
                    config.weight_physics * p_grad[static_cast<std::size_t>(k)] *
                    decode_bounded_grad(raw(k, 0),
                                        spec.params[static_cast<std::size_t>(k)].range_lo,
                                        spec.params[static_cast<std::size_t>(k)].range_hi);
            }
        } else {
            if (!last) {
                for (auto* gp : g_total.leaves()) *gp *= config.weight_data;
            }
            lp = log_row || joint
                     ? surrogate_physics_loss(s, taus_colloc, spec, p_now, scale, t_horizon,
                                              nullptr, {})
                     : 0.0;
        }

        const double total = config.weight_data * ld + config.weight_physics * lp;
        if (!std::isfinite(total)) {
            result.history.push_back({step, ld, lp, total});
            result.diverged = true;
            return result;
        }
        if (joint && total < result.best_total) {
            result.best_total = total;
            result.best_step = step;
            result.params = p_now;
        }
        if (log_row) result.history.push_back({step, ld, lp, total});
        if (!last) opt.step(weights, grad_list, config.lr);
    }
    return result;
}

} // namespace epifit
