#include "epifit/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace epifit {

namespace {

const char* kind_label(MetricKind k) {
    return k == MetricKind::Mae ? "mae" : "rel_l2_pct";
}

struct Moments {
    double mean = 0.0;
    double std_dev = 0.0;
    int n = 0;
};

Moments moments(std::span<const double> values) {
    Moments m;
    m.n = static_cast<int>(values.size());
    if (m.n == 0) return m;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / m.n;
    double sq = 0.0;
    for (double v : values) sq += (v - m.mean) * (v - m.mean);
    m.std_dev = std::sqrt(sq / m.n);
    return m;
}

} // namespace

ParamError param_error(double pred, double true_value, bool zero_true) {
    if (!std::isfinite(pred) || !std::isfinite(true_value)) {
        throw Error("param_error needs finite inputs");
    }
    if (zero_true) {
        return {std::abs(pred - true_value), MetricKind::Mae};
    }
    if (true_value == 0.0) {
        throw Error("relative error against a true value of 0; the descriptor "
                    "should mark this parameter zero_true");
    }
    return {100.0 * std::abs(pred - true_value) / std::abs(true_value),
            MetricKind::RelL2Pct};
}

EvalReport evaluate(const ModelSpec& spec, const std::vector<EstimatePair>& estimates,
                    std::span<const double> wall_seconds) {
    if (estimates.empty()) throw Error("evaluate needs at least one estimate pair");
    const std::size_t P = spec.n_params();
    for (const auto& e : estimates) {
        if (e.predicted.size() != P || e.truth.size() != P) {
            throw DimensionError("estimate pair length does not match " + spec.model_id);
        }
    }

    EvalReport report;
    report.model_id = spec.model_id;
    report.n_tasks = static_cast<int>(estimates.size());

    std::vector<double> pooled;
    for (std::size_t k = 0; k < P; ++k) {
        const ParamDescriptor& d = spec.params[k];
        std::vector<double> errs;
        errs.reserve(estimates.size());
        for (const auto& e : estimates) {
            ParamError pe = param_error(e.predicted[k], e.truth[k], d.zero_true);
            errs.push_back(pe.value);
            if (!d.zero_true) pooled.push_back(pe.value);
        }
        Moments m = moments(errs);
        report.per_param.push_back(
            {d.name, d.zero_true ? MetricKind::Mae : MetricKind::RelL2Pct, m.mean,
             m.std_dev});
    }
    Moments agg = moments(pooled);
    report.aggregate_mean = agg.mean;
    report.aggregate_std = agg.std_dev;
    report.aggregate_n = agg.n;

    if (!wall_seconds.empty()) {
        report.has_wall = true;
        double sum = 0.0, mx = 0.0;
        for (double w : wall_seconds) {
            sum += w;
            mx = std::max(mx, w);
        }
        report.wall_mean_s = sum / static_cast<double>(wall_seconds.size());
        report.wall_max_s = mx;
    }
    return report;
}

PeakStats peak_stats(const Trajectory& traj, int channel) {
    if (channel < 0 || channel >= static_cast<int>(traj.n_states())) {
        throw DimensionError("channel " + std::to_string(channel) + " out of range for " +
                             traj.model_id);
    }
    if (traj.t_grid.empty()) throw Error("empty trajectory");
    int best = 0;
    for (int i = 1; i < static_cast<int>(traj.t_grid.size()); ++i) {
        if (traj.states(i, channel) > traj.states(best, channel)) best = i;
    }
    return {best, traj.t_grid[static_cast<std::size_t>(best)], traj.states(best, channel)};
}

std::string report_text(const EvalReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "model: %s    test tasks: %d\n",
                  report.model_id.c_str(), report.n_tasks);
    out += line;
    std::size_t name_w = 9;
    for (const auto& p : report.per_param) name_w = std::max(name_w, p.name.size());
    std::snprintf(line, sizeof line, "%-*s  %-10s  %12s  %12s\n",
                  static_cast<int>(name_w), "parameter", "metric", "mean", "std_dev");
    out += line;
    for (const auto& p : report.per_param) {
        std::snprintf(line, sizeof line, "%-*s  %-10s  %12.6g  %12.6g\n",
                      static_cast<int>(name_w), p.name.c_str(), kind_label(p.kind), p.mean,
                      p.std_dev);
        out += line;
    }
    std::snprintf(line, sizeof line, "%-*s  %-10s  %12.6g  %12.6g\n",
                  static_cast<int>(name_w), "aggregate", "rel_l2_pct",
                  report.aggregate_mean, report.aggregate_std);
    out += line;
    if (report.has_wall) {
        std::snprintf(line, sizeof line,
                      "inference wall time: mean %.6g s, max %.6g s\n", report.wall_mean_s,
                      report.wall_max_s);
        out += line;
    }
    return out;
}

nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json j;
    j["model_id"] = report.model_id;
    j["n_tasks"] = report.n_tasks;
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : report.per_param) {
        params.push_back({{"name", p.name},
                          {"metric", kind_label(p.kind)},
                          {"mean", p.mean},
                          {"std_dev", p.std_dev}});
    }
    j["per_param"] = params;
    j["aggregate"] = {{"metric", "rel_l2_pct"},
                      {"mean", report.aggregate_mean},
                      {"std_dev", report.aggregate_std},
                      {"n", report.aggregate_n}};
    if (report.has_wall) {
        j["inference_wall_s"] = {{"mean", report.wall_mean_s}, {"max", report.wall_max_s}};
    }
    return j;
}

} // namespace epifit
