#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epifit/models.hpp"
#include "epifit/solver.hpp"

namespace epifit {

enum class MetricKind { RelL2Pct, Mae };

/// Error of one scalar estimate: mean absolute error when the benchmark
/// truth for this parameter is exactly zero, relative percentage L2 error
/// (100 * |pred - true| / |true|) otherwise.
struct ParamError {
    double value;
    MetricKind kind;
};
ParamError param_error(double pred, double true_value, bool zero_true);

struct ParamStat {
    std::string name;
    MetricKind kind;
    double mean;
    double std_dev; ///< population convention (divide by n)
};

/// Per-parameter and pooled error statistics over a set of test tasks.
/// The aggregate pools every (task, parameter) error with a non-zero-true
/// parameter; zero-true parameters are reported per parameter only, since
/// their MAE values are not commensurable with percentages.
struct EvalReport {
    std::string model_id;
    int n_tasks = 0;
    std::vector<ParamStat> per_param;
    double aggregate_mean = 0.0;
    double aggregate_std = 0.0;
    int aggregate_n = 0;
    bool has_wall = false;
    double wall_mean_s = 0.0;
    double wall_max_s = 0.0;
};

struct EstimatePair {
    std::vector<double> predicted;
    std::vector<double> truth;
};

/// Computes the report over aligned (predicted, truth) pairs. Optional
/// per-task inference wall times populate the latency fields.
EvalReport evaluate(const ModelSpec& spec, const std::vector<EstimatePair>& estimates,
                    std::span<const double> wall_seconds = {});

/// Discrete-grid peak of one trajectory channel; ties break toward the
/// earliest time.
struct PeakStats {
    int index;
    double t_peak;
    double y_peak;
};
PeakStats peak_stats(const Trajectory& traj, int channel);

/// Aligned plain-text table of the report (one row per parameter, then the
/// aggregate row).
std::string report_text(const EvalReport& report);

/// Same content, machine-readable.
nlohmann::json report_json(const EvalReport& report);

} // namespace epifit
