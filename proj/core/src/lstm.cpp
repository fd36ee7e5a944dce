#include "epifit/lstm.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "epifit/rng.hpp"
#include "epifit/serialize.hpp"

namespace epifit {

namespace {

constexpr char kWeightsMagic[8] = {'E', 'P', 'I', 'F', 'I', 'T', 'W', 'T'};
constexpr std::uint32_t kWeightsVersion = 1;

/// Columns processed per forward/backward slab. Bounds activation memory
/// while keeping the batched products wide enough for throughput.
constexpr int kChunkCols = 256;

/// Recorded activations of one LSTM layer over a chunk. gates[t] stacks the
/// post-activation input, forget, candidate and output gates (4H x B).
template <typename S>
struct LayerTape {
    std::vector<Mat<S>> gates, c, tc, h;
};

template <typename S>
struct Tape {
    std::vector<LayerTape<S>> layer;
    Mat<S> concat;
    std::vector<Mat<S>> dense_a;
    Mat<S> yhat;
};

template <typename S>
void apply_gate_activations(Mat<S>& G, int H) {
    auto i = G.topRows(H).array();
    i = S(1) / (S(1) + (-i).exp());
    auto f = G.middleRows(H, H).array();
    f = S(1) / (S(1) + (-f).exp());
    auto g = G.middleRows(2 * H, H).array();
    g = g.tanh();
    auto o = G.bottomRows(H).array();
    o = S(1) / (S(1) + (-o).exp());
}

template <typename S>
void forward_tape(const RegressorWeightsT<S>& w, const std::vector<Mat<S>>& x, Tape<S>& tp) {
    const int L = w.config.n_layers;
    const int H = w.config.hidden;
    const int T = static_cast<int>(x.size());
    const int B = static_cast<int>(x[0].cols());

    tp.layer.assign(static_cast<std::size_t>(L), {});
    const std::vector<Mat<S>>* input = &x;
    for (int l = 0; l < L; ++l) {
        auto& lt = tp.layer[static_cast<std::size_t>(l)];
        const auto& lw = w.layers[static_cast<std::size_t>(l)];
        lt.gates.resize(T);
        lt.c.resize(T);
        lt.tc.resize(T);
        lt.h.resize(T);
        for (int t = 0; t < T; ++t) {
            Mat<S> G(4 * H, B);
            G.noalias() = lw.W * (*input)[t];
            if (t > 0) G.noalias() += lw.R * lt.h[t - 1];
            G.colwise() += lw.b.col(0);
            apply_gate_activations(G, H);
            auto i = G.topRows(H).array();
            auto f = G.middleRows(H, H).array();
            auto g = G.middleRows(2 * H, H).array();
            auto o = G.bottomRows(H).array();
            Mat<S> c(H, B);
            if (t > 0) {
                c.array() = f * lt.c[t - 1].array() + i * g;
            } else {
                c.array() = i * g;
            }
            Mat<S> tc = c.array().tanh().matrix();
            Mat<S> h(H, B);
            h.array() = o * tc.array();
            lt.gates[t] = std::move(G);
            lt.c[t] = std::move(c);
            lt.tc[t] = std::move(tc);
            lt.h[t] = std::move(h);
        }
        input = &lt.h;
    }

    tp.concat.resize(L * H, B);
    for (int l = 0; l < L; ++l) {
        tp.concat.middleRows(l * H, H) = tp.layer[static_cast<std::size_t>(l)].h[T - 1];
    }
    const int K = static_cast<int>(w.dense_w.size());
    tp.dense_a.assign(static_cast<std::size_t>(K), {});
    const Mat<S>* a = &tp.concat;
    for (int k = 0; k < K; ++k) {
        Mat<S> z;
        z.noalias() = w.dense_w[static_cast<std::size_t>(k)] * (*a);
        z.colwise() += w.dense_b[static_cast<std::size_t>(k)].col(0);
        tp.dense_a[static_cast<std::size_t>(k)] = z.cwiseMax(S(0));
        a = &tp.dense_a[static_cast<std::size_t>(k)];
    }
    tp.yhat.noalias() = w.out_w * (*a);
    tp.yhat.colwise() += w.out_b.col(0);
}

/// Accumulates gradients for one chunk into `g` and returns the chunk's sum
/// of squared errors. `grad_scale` is d(loss)/d(sse), i.e. 1/(batch * P)
/// of the enclosing mini-batch.
template <typename S>
double backward_tape(const RegressorWeightsT<S>& w, const std::vector<Mat<S>>& x,
                     const Mat<S>& targets, const Tape<S>& tp, double grad_scale,
                     RegressorWeightsT<S>& g) {
    const int L = w.config.n_layers;
    const int H = w.config.hidden;
    const int T = static_cast<int>(x.size());
    const int B = static_cast<int>(targets.cols());
    const int K = static_cast<int>(w.dense_w.size());

    Mat<S> diff = tp.yhat - targets;
    double sse = diff.template cast<double>().squaredNorm();

    Mat<S> dY = diff * static_cast<S>(2.0 * grad_scale);
    const Mat<S>& a_last = (K > 0) ? tp.dense_a[static_cast<std::size_t>(K - 1)] : tp.concat;
    g.out_w.noalias() += dY * a_last.transpose();
    g.out_b.col(0).noalias() += dY.rowwise().sum();
    Mat<S> dA = w.out_w.transpose() * dY;
    for (int k = K - 1; k >= 0; --k) {
        const Mat<S>& a = tp.dense_a[static_cast<std::size_t>(k)];
        Mat<S> dZ = (dA.array() * (a.array() > S(0)).template cast<S>()).matrix();
        const Mat<S>& in = (k == 0) ? tp.concat : tp.dense_a[static_cast<std::size_t>(k - 1)];
        g.dense_w[static_cast<std::size_t>(k)].noalias() += dZ * in.transpose();
        g.dense_b[static_cast<std::size_t>(k)].col(0).noalias() += dZ.rowwise().sum();
        dA = w.dense_w[static_cast<std::size_t>(k)].transpose() * dZ;
    }

    // dA now carries the gradient w.r.t. the concatenated final hidden
    // states; route each slice to its layer as an external addition at the
    // final time step. Lower layers additionally receive, at every step, the
    // input gradient of the layer above.
    std::vector<std::vector<Mat<S>>> dh_ext(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        dh_ext[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(T), Mat<S>());
        dh_ext[static_cast<std::size_t>(l)][static_cast<std::size_t>(T - 1)] =
            dA.middleRows(l * H, H);
    }

    Mat<S> dG(4 * H, B);
    for (int l = L - 1; l >= 0; --l) {
        const auto& lt = tp.layer[static_cast<std::size_t>(l)];
        const auto& lw = w.layers[static_cast<std::size_t>(l)];
        auto& gl = g.layers[static_cast<std::size_t>(l)];
        const std::vector<Mat<S>>& in_seq =
            (l == 0) ? x : tp.layer[static_cast<std::size_t>(l - 1)].h;

        Mat<S> dh = Mat<S>::Zero(H, B);
        Mat<S> dc = Mat<S>::Zero(H, B);
        for (int t = T - 1; t >= 0; --t) {
            const Mat<S>& ext = dh_ext[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
            if (ext.size() > 0) dh += ext;

            auto i = lt.gates[t].topRows(H).array();
            auto f = lt.gates[t].middleRows(H, H).array();
            auto gc = lt.gates[t].middleRows(2 * H, H).array();
            auto o = lt.gates[t].bottomRows(H).array();
            auto tc = lt.tc[t].array();

            dc.array() += dh.array() * o * (S(1) - tc * tc);
            dG.topRows(H).array() = (dc.array() * gc) * i * (S(1) - i);
            if (t > 0) {
                dG.middleRows(H, H).array() = (dc.array() * lt.c[t - 1].array()) * f * (S(1) - f);
            } else {
                dG.middleRows(H, H).setZero(); // c_{-1} = 0, no forget-path gradient
            }
            dG.middleRows(2 * H, H).array() = (dc.array() * i) * (S(1) - gc * gc);
            dG.bottomRows(H).array() = (dh.array() * tc) * o * (S(1) - o);

            gl.W.noalias() += dG * in_seq[t].transpose();
            if (t > 0) gl.R.noalias() += dG * lt.h[t - 1].transpose();
            gl.b.col(0).noalias() += dG.rowwise().sum();

            if (l > 0) {
                Mat<S>& lower = dh_ext[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(t)];
                if (lower.size() > 0) {
                    lower.noalias() += lw.W.transpose() * dG;
                } else {
                    lower = lw.W.transpose() * dG;
                }
            }
            dh.noalias() = lw.R.transpose() * dG;
            dc.array() *= f;
        }
    }
    return sse;
}

/// Allocates every array at its configured shape, zero-filled.
template <typename S>
RegressorWeightsT<S> shaped_weights(const RegressorConfig& config) {
    if (config.n_layers < 1 || config.hidden < 1 || config.input_dim < 1 ||
        config.output_dim < 1) {
        throw Error("regressor dimensions must all be at least 1");
    }
    for (int s : config.dense_sizes) {
        if (s < 1) throw Error("dense layer sizes must all be at least 1");
    }
    RegressorWeightsT<S> w;
    w.config = config;
    int in = config.input_dim;
    for (int l = 0; l < config.n_layers; ++l) {
        LstmLayerT<S> layer;
        layer.W = Mat<S>::Zero(4 * config.hidden, in);
        layer.R = Mat<S>::Zero(4 * config.hidden, config.hidden);
        layer.b = Mat<S>::Zero(4 * config.hidden, 1);
        w.layers.push_back(std::move(layer));
        in = config.hidden;
    }
    in = config.n_layers * config.hidden;
    for (int s : config.dense_sizes) {
        w.dense_w.push_back(Mat<S>::Zero(s, in));
        w.dense_b.push_back(Mat<S>::Zero(s, 1));
        in = s;
    }
    w.out_w = Mat<S>::Zero(config.output_dim, in);
    w.out_b = Mat<S>::Zero(config.output_dim, 1);
    return w;
}

template <typename S>
void fill_uniform(Mat<S>& m, double bound, Rng& rng) {
    S* data = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        data[i] = static_cast<S>((2.0 * rng.u01() - 1.0) * bound);
    }
}

struct PackedSplit {
    std::vector<Mat<float>> x; ///< [t] input_dim x N
    Mat<float> targets;        ///< output_dim x N
};

PackedSplit pack_split(const std::vector<Example>& split, const NormStats& norm, int T,
                       int D, int P) {
    PackedSplit ps;
    ps.x.assign(static_cast<std::size_t>(T), Mat<float>(D, static_cast<int>(split.size())));
    ps.targets.resize(P, static_cast<int>(split.size()));
    for (std::size_t e = 0; e < split.size(); ++e) {
        Eigen::MatrixXd nm = normalize_trajectory(split[e].states, norm);
        if (nm.rows() != T) {
            throw DimensionError("example " + std::to_string(e) + " has " +
                                 std::to_string(nm.rows()) + " grid points, expected " +
                                 std::to_string(T));
        }
        for (int t = 0; t < T; ++t) {
            for (int d = 0; d < D; ++d) {
                ps.x[static_cast<std::size_t>(t)](d, static_cast<int>(e)) =
                    static_cast<float>(nm(t, d));
            }
        }
        std::vector<double> sp = scale_params(split[e].params, norm);
        for (int p = 0; p < P; ++p) {
            ps.targets(p, static_cast<int>(e)) = static_cast<float>(sp[p]);
        }
    }
    return ps;
}

void gather_chunk(const PackedSplit& ps, const std::vector<int>& order, int begin, int end,
                  PackedBatchT<float>& out) {
    const int T = static_cast<int>(ps.x.size());
    const int D = static_cast<int>(ps.x[0].rows());
    const int P = static_cast<int>(ps.targets.rows());
    const int B = end - begin;
    out.x.assign(static_cast<std::size_t>(T), Mat<float>(D, B));
    out.targets.resize(P, B);
    for (int j = 0; j < B; ++j) {
        int src = order[static_cast<std::size_t>(begin + j)];
        for (int t = 0; t < T; ++t) {
            out.x[static_cast<std::size_t>(t)].col(j) = ps.x[static_cast<std::size_t>(t)].col(src);
        }
        out.targets.col(j) = ps.targets.col(src);
    }
}

/// Runs fn(chunk_index) for every chunk, on `jobs` threads when asked.
/// Chunks write to disjoint slots, so scheduling cannot affect results.
void run_chunks(int jobs, int n_chunks, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n_chunks <= 1) {
        for (int j = 0; j < n_chunks; ++j) fn(j);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int j = next.fetch_add(1); j < n_chunks; j = next.fetch_add(1)) fn(j);
    };
    std::vector<std::thread> pool;
    int n_threads = std::min(jobs, n_chunks);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

/// Mini-batch loss plus gradients, evaluated in column slabs of at most
/// kChunkCols and reduced in slab order so the result is identical for any
/// jobs count.
double batch_loss_and_grad(const RegressorWeightsT<float>& w, const PackedSplit& ps,
                           const std::vector<int>& order, int begin, int end, int jobs,
                           RegressorWeightsT<float>& grads) {
    const int B = end - begin;
    const int P = static_cast<int>(ps.targets.rows());
    const int n_chunks = (B + kChunkCols - 1) / kChunkCols;
    const double grad_scale = 1.0 / (static_cast<double>(B) * P);

    std::vector<RegressorWeightsT<float>> slot_grads(static_cast<std::size_t>(n_chunks));
    std::vector<double> slot_sse(static_cast<std::size_t>(n_chunks), 0.0);
    run_chunks(jobs, n_chunks, [&](int j) {
        int cb = begin + j * kChunkCols;
        int ce = std::min(end, cb + kChunkCols);
        PackedBatchT<float> chunk;
        gather_chunk(ps, order, cb, ce, chunk);
        Tape<float> tape;
        forward_tape(w, chunk.x, tape);
        slot_grads[static_cast<std::size_t>(j)] = zeros_like(w);
        slot_sse[static_cast<std::size_t>(j)] = backward_tape(
            w, chunk.x, chunk.targets, tape, grad_scale, slot_grads[static_cast<std::size_t>(j)]);
    });

    double sse = 0.0;
    auto gl = grads.leaves();
    for (int j = 0; j < n_chunks; ++j) {
        sse += slot_sse[static_cast<std::size_t>(j)];
        auto sl = slot_grads[static_cast<std::size_t>(j)].leaves();
        for (std::size_t k = 0; k < gl.size(); ++k) *gl[k] += *sl[k];
    }
    return sse * grad_scale;
}

/// Forward-only mean squared error over a whole packed split.
double split_mse(const RegressorWeightsT<float>& w, const PackedSplit& ps, int jobs) {
    const int N = static_cast<int>(ps.targets.cols());
    const int P = static_cast<int>(ps.targets.rows());
    const int n_chunks = (N + kChunkCols - 1) / kChunkCols;
    std::vector<int> order(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
    std::vector<double> slot_sse(static_cast<std::size_t>(n_chunks), 0.0);
    run_chunks(jobs, n_chunks, [&](int j) {
        int cb = j * kChunkCols;
        int ce = std::min(N, cb + kChunkCols);
        PackedBatchT<float> chunk;
        gather_chunk(ps, order, cb, ce, chunk);
        Tape<float> tape;
        forward_tape(w, chunk.x, tape);
        slot_sse[static_cast<std::size_t>(j)] =
            (tape.yhat - chunk.targets).cast<double>().squaredNorm();
    });
    double sse = 0.0;
    for (double s : slot_sse) sse += s;
    return sse / (static_cast<double>(N) * P);
}

} // namespace

template <typename S>
std::vector<Mat<S>*> RegressorWeightsT<S>::leaves() {
    std::vector<Mat<S>*> out;
    for (auto& l : layers) {
        out.push_back(&l.W);
        out.push_back(&l.R);
        out.push_back(&l.b);
    }
    for (std::size_t k = 0; k < dense_w.size(); ++k) {
        out.push_back(&dense_w[k]);
        out.push_back(&dense_b[k]);
    }
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
}

template <typename S>
std::vector<const Mat<S>*> RegressorWeightsT<S>::leaves() const {
    std::vector<const Mat<S>*> out;
    for (const auto& l : layers) {
        out.push_back(&l.W);
        out.push_back(&l.R);
        out.push_back(&l.b);
    }
    for (std::size_t k = 0; k < dense_w.size(); ++k) {
        out.push_back(&dense_w[k]);
        out.push_back(&dense_b[k]);
    }
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
}

template <typename S>
RegressorWeightsT<S> init_weights_t(const RegressorConfig& config) {
    RegressorWeightsT<S> w = shaped_weights<S>(config);
    Rng rng(derive_seed(config.seed, "weight-init"));
    const int H = config.hidden;
    int in = config.input_dim;
    for (auto& layer : w.layers) {
        fill_uniform(layer.W, 1.0 / std::sqrt(static_cast<double>(in)), rng);
        fill_uniform(layer.R, 1.0 / std::sqrt(static_cast<double>(H)), rng);
        fill_uniform(layer.b, 1.0 / std::sqrt(static_cast<double>(H)), rng);
        layer.b.middleRows(H, H).setConstant(S(1)); // forget-gate bias policy
        in = H;
    }
    in = config.n_layers * H;
    for (std::size_t k = 0; k < w.dense_w.size(); ++k) {
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        fill_uniform(w.dense_w[k], bound, rng);
        fill_uniform(w.dense_b[k], bound, rng);
        in = static_cast<int>(w.dense_w[k].rows());
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    fill_uniform(w.out_w, bound, rng);
    fill_uniform(w.out_b, bound, rng);
    return w;
}

RegressorWeights init_weights(const RegressorConfig& config) {
    return init_weights_t<float>(config);
}

template <typename S>
RegressorWeightsT<S> zeros_like(const RegressorWeightsT<S>& w) {
    return shaped_weights<S>(w.config);
}

template <typename S>
Mat<S> forward_batch(const RegressorWeightsT<S>& w, const std::vector<Mat<S>>& x) {
    if (x.empty()) throw Error("empty input sequence");
    if (x[0].rows() != w.config.input_dim) {
        throw DimensionError("input has " + std::to_string(x[0].rows()) +
                             " channels, regressor expects " +
                             std::to_string(w.config.input_dim));
    }
    for (const auto& xt : x) {
        if (!xt.allFinite()) throw Error("non-finite input to the regressor");
    }
    Tape<S> tape;
    forward_tape(w, x, tape);
    return tape.yhat;
}

std::vector<double> forward(const RegressorWeights& w, const Eigen::MatrixXd& normalized) {
    const int T = static_cast<int>(normalized.rows());
    const int D = static_cast<int>(normalized.cols());
    std::vector<Mat<float>> x(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        x[static_cast<std::size_t>(t)].resize(D, 1);
        for (int d = 0; d < D; ++d) {
            x[static_cast<std::size_t>(t)](d, 0) = static_cast<float>(normalized(t, d));
        }
    }
    Mat<float> y = forward_batch(w, x);
    std::vector<double> out(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index i = 0; i < y.rows(); ++i) out[static_cast<std::size_t>(i)] = y(i, 0);
    return out;
}

template <typename S>
double loss_and_grad(const RegressorWeightsT<S>& w, const PackedBatchT<S>& batch,
                     RegressorWeightsT<S>& grads) {
    if (batch.x.empty() || batch.targets.cols() == 0) throw Error("empty batch");
    const double grad_scale =
        1.0 / (static_cast<double>(batch.targets.cols()) * batch.targets.rows());
    Tape<S> tape;
    forward_tape(w, batch.x, tape);
    double sse = backward_tape(w, batch.x, batch.targets, tape, grad_scale, grads);
    double loss = sse * grad_scale;
    if (!std::isfinite(loss)) {
        throw Error("non-finite loss over a batch of " +
                    std::to_string(batch.targets.cols()) + " examples");
    }
    return loss;
}

TrainResult train(const Dataset& ds, const RegressorConfig& rc, const TrainConfig& tc) {
    const ModelSpec& spec = ds.spec();
    RegressorConfig config = rc;
    if (config.input_dim == 0) config.input_dim = static_cast<int>(spec.n_states());
    if (config.output_dim == 0) config.output_dim = static_cast<int>(spec.n_params());
    if (config.input_dim != static_cast<int>(spec.n_states()) ||
        config.output_dim != static_cast<int>(spec.n_params())) {
        throw DimensionError("regressor dims (" + std::to_string(config.input_dim) + ", " +
                             std::to_string(config.output_dim) + ") do not match " +
                             spec.model_id);
    }
    if (ds.train.empty() || ds.val.empty()) throw Error("dataset needs train and val splits");

    const int T = static_cast<int>(ds.t_grid.size());
    const int D = config.input_dim;
    const int P = config.output_dim;
    const int N = static_cast<int>(ds.train.size());
    PackedSplit train_ps = pack_split(ds.train, ds.norm, T, D, P);
    PackedSplit val_ps = pack_split(ds.val, ds.norm, T, D, P);

    TrainResult result;
    result.weights = init_weights_t<float>(config);
    RegressorWeightsT<float>& w = result.weights;
    auto wl = w.leaves();

    Adam<float> opt(tc.beta1, tc.beta2, tc.eps);
    const int batch = (tc.batch <= 0) ? N : std::min(tc.batch, N);
    const int log_every = std::max(1, tc.log_every);

    auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&t_start] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    result.history.push_back({0, split_mse(w, train_ps, tc.jobs),
                              split_mse(w, val_ps, tc.jobs), lr_at_epoch(tc, 0), elapsed()});

    std::vector<int> order(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;

    RegressorWeightsT<float> grads = zeros_like(w);
    auto gl_const = [&grads] {
        std::vector<const Mat<float>*> out;
        for (auto* p : grads.leaves()) out.push_back(p);
        return out;
    }();

    for (int e = 0; e < tc.epochs; ++e) {
        const double lr = lr_at_epoch(tc, e);
        Rng shuffle_rng(derive_seed(tc.seed, "shuffle", static_cast<std::uint64_t>(e)));
        shuffle_rng.shuffle(order);

        double epoch_sse = 0.0;
        for (int s = 0; s < N; s += batch) {
            int end = std::min(N, s + batch);
            for (auto* gp : grads.leaves()) gp->setZero();
            double loss = batch_loss_and_grad(w, train_ps, order, s, end, tc.jobs, grads);
            if (!std::isfinite(loss)) {
                result.history.push_back(
                    {e + 1, loss, split_mse(w, val_ps, tc.jobs), lr, elapsed()});
                result.diverged = true;
                return result;
            }
            epoch_sse += loss * static_cast<double>(end - s) * P;
            opt.step(wl, gl_const, lr);
        }

        bool weights_finite = true;
        for (const auto* p : w.leaves()) weights_finite = weights_finite && p->allFinite();
        if (!weights_finite) {
            result.history.push_back(
                {e + 1, epoch_sse / (static_cast<double>(N) * P),
                 std::numeric_limits<double>::quiet_NaN(), lr, elapsed()});
            result.diverged = true;
            return result;
        }

        if ((e + 1) % log_every == 0 || e + 1 == tc.epochs) {
            result.history.push_back({e + 1, epoch_sse / (static_cast<double>(N) * P),
                                      split_mse(w, val_ps, tc.jobs), lr, elapsed()});
        }
    }
    return result;
}

std::vector<double> infer(const TrainedRegressor& reg, const Trajectory& traj) {
    if (static_cast<int>(traj.n_samples()) != reg.n_samples) {
        throw Error("trajectory has " + std::to_string(traj.n_samples()) +
                    " grid points, regressor was trained on " +
                    std::to_string(reg.n_samples));
    }
    Eigen::MatrixXd normalized = normalize_trajectory(traj.states, reg.norm);
    std::vector<double> scaled = forward(reg.weights, normalized);
    return unscale_params(scaled, reg.norm);
}

void save_regressor(const TrainedRegressor& reg, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.write_magic(kWeightsMagic);
    w.write_u32(kWeightsVersion);
    w.write_string(reg.model_id);
    w.write_u64(static_cast<std::uint64_t>(reg.n_samples));
    const RegressorConfig& c = reg.weights.config;
    w.write_u64(static_cast<std::uint64_t>(c.n_layers));
    w.write_u64(static_cast<std::uint64_t>(c.hidden));
    w.write_u64(c.dense_sizes.size());
    for (int s : c.dense_sizes) w.write_u64(static_cast<std::uint64_t>(s));
    w.write_u64(static_cast<std::uint64_t>(c.input_dim));
    w.write_u64(static_cast<std::uint64_t>(c.output_dim));
    w.write_u64(c.seed);

    w.write_u64(reg.norm.n_channels());
    w.write_f64_array(reg.norm.ch_min.data(), reg.norm.ch_min.size());
    w.write_f64_array(reg.norm.ch_max.data(), reg.norm.ch_max.size());
    for (auto d : reg.norm.ch_degenerate) w.write_u32(d);
    w.write_u64(reg.norm.n_params());
    w.write_f64_array(reg.norm.p_lo.data(), reg.norm.p_lo.size());
    w.write_f64_array(reg.norm.p_hi.data(), reg.norm.p_hi.size());

    auto leaves = reg.weights.leaves();
    w.write_u64(leaves.size());
    for (const auto* leaf : leaves) {
        w.write_u64(static_cast<std::uint64_t>(leaf->rows()));
        w.write_u64(static_cast<std::uint64_t>(leaf->cols()));
        for (Eigen::Index j = 0; j < leaf->cols(); ++j) {
            for (Eigen::Index i = 0; i < leaf->rows(); ++i) {
                w.write_f64(static_cast<double>((*leaf)(i, j)));
            }
        }
    }
    w.close();

    nlohmann::json sidecar;
    sidecar["format"] = "epifit regressor weights";
    sidecar["format_version"] = kWeightsVersion;
    sidecar["model_id"] = reg.model_id;
    sidecar["n_samples"] = reg.n_samples;
    sidecar["n_layers"] = c.n_layers;
    sidecar["hidden"] = c.hidden;
    sidecar["dense_sizes"] = c.dense_sizes;
    sidecar["input_dim"] = c.input_dim;
    sidecar["output_dim"] = c.output_dim;
    sidecar["seed"] = c.seed;
    std::ofstream side(path.string() + ".json");
    side << sidecar.dump(2) << "\n";
}

TrainedRegressor load_regressor(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic(kWeightsMagic);
    std::uint32_t version = r.read_u32();
    if (version != kWeightsVersion) {
        throw FormatError("'" + path.string() + "' has weights format version " +
                              std::to_string(version) + ", expected " +
                              std::to_string(kWeightsVersion),
                          r.offset() - sizeof(std::uint32_t));
    }
    TrainedRegressor reg;
    reg.model_id = r.read_string();
    reg.n_samples = static_cast<int>(r.read_u64());
    RegressorConfig c;
    c.n_layers = static_cast<int>(r.read_u64());
    c.hidden = static_cast<int>(r.read_u64());
    std::uint64_t n_dense = r.read_u64();
    c.dense_sizes.clear();
    for (std::uint64_t i = 0; i < n_dense; ++i) {
        c.dense_sizes.push_back(static_cast<int>(r.read_u64()));
    }
    c.input_dim = static_cast<int>(r.read_u64());
    c.output_dim = static_cast<int>(r.read_u64());
    c.seed = r.read_u64();

    std::uint64_t n_ch = r.read_u64();
    reg.norm.ch_min.resize(n_ch);
    reg.norm.ch_max.resize(n_ch);
    reg.norm.ch_degenerate.resize(n_ch);
    r.read_f64_array(reg.norm.ch_min.data(), n_ch);
    r.read_f64_array(reg.norm.ch_max.data(), n_ch);
    for (std::uint64_t i = 0; i < n_ch; ++i) {
        reg.norm.ch_degenerate[i] = static_cast<std::uint8_t>(r.read_u32());
    }
    std::uint64_t n_p = r.read_u64();
    reg.norm.p_lo.resize(n_p);
    reg.norm.p_hi.resize(n_p);
    r.read_f64_array(reg.norm.p_lo.data(), n_p);
    r.read_f64_array(reg.norm.p_hi.data(), n_p);

    reg.weights = shaped_weights<float>(c);
    auto leaves = reg.weights.leaves();
    std::uint64_t n_leaves = r.read_u64();
    if (n_leaves != leaves.size()) {
        throw FormatError("'" + path.string() + "' holds " + std::to_string(n_leaves) +
                              " weight arrays, configuration implies " +
                              std::to_string(leaves.size()),
                          r.offset());
    }
    for (auto* leaf : leaves) {
        std::uint64_t rows = r.read_u64();
        std::uint64_t cols = r.read_u64();
        if (rows != static_cast<std::uint64_t>(leaf->rows()) ||
            cols != static_cast<std::uint64_t>(leaf->cols())) {
            throw FormatError("'" + path.string() + "' weight array is " +
                                  std::to_string(rows) + "x" + std::to_string(cols) +
                                  ", configuration implies " + std::to_string(leaf->rows()) +
                                  "x" + std::to_string(leaf->cols()),
                              r.offset());
        }
        for (std::uint64_t j = 0; j < cols; ++j) {
            for (std::uint64_t i = 0; i < rows; ++i) {
                (*leaf)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    static_cast<float>(r.read_f64());
            }
        }
    }
    return reg;
}

template struct RegressorWeightsT<float>;
template struct RegressorWeightsT<double>;
template RegressorWeightsT<float> init_weights_t<float>(const RegressorConfig&);
template RegressorWeightsT<double> init_weights_t<double>(const RegressorConfig&);
template RegressorWeightsT<float> zeros_like<float>(const RegressorWeightsT<float>&);
template RegressorWeightsT<double> zeros_like<double>(const RegressorWeightsT<double>&);
template Mat<float> forward_batch<float>(const RegressorWeightsT<float>&,
                                         const std::vector<Mat<float>>&);
template Mat<double> forward_batch<double>(const RegressorWeightsT<double>&,
                                           const std::vector<Mat<double>>&);
template double loss_and_grad<float>(const RegressorWeightsT<float>&,
                                     const PackedBatchT<float>&, RegressorWeightsT<float>&);
template double loss_and_grad<double>(const RegressorWeightsT<double>&,
                                      const PackedBatchT<double>&,
                                      RegressorWeightsT<double>&);

} // namespace epifit
