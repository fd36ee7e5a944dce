#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epifit/dual.hpp"

#include <nlohmann/json.hpp>

namespace epifit {

/// One estimated coefficient of a disease model.
struct ParamDescriptor {
    std::string name;
    double range_lo;
    double range_hi;
    /// True when the benchmark ground-truth value is exactly 0 (for those
    /// parameters error is reported as MAE instead of relative error).
    bool zero_true = false;
};

/// Named value appearing in a right-hand side but not estimated.
struct ModelConstant {
    std::string name;
    double value;
};

using RhsFnD = void (*)(const double* y, const double* p, const double* c, double* dy);
using RhsFnDual = void (*)(const Dual1* y, const Dual1* p, const double* c, Dual1* dy);

/// Complete description of one disease model: compartments, estimated
/// parameters with sampling ranges, fixed constants, default initial state
/// and output grid, plus right-hand-side evaluators for plain and
/// derivative-carrying scalars.
///
/// Parameter order is fixed: serialized parameter vectors always align with
/// `params`. Tier 1 models have cleanly published equations and take part in
/// quantitative acceptance; tier 2 models (smallpox, pneumonia, zika) carry a
/// documented interpretation of ambiguous sources and are exercised only
/// structurally.
struct ModelSpec {
    std::string model_id;
    std::string display_name;
    int tier = 1;
    std::vector<std::string> state_labels;
    std::vector<ParamDescriptor> params;
    std::vector<ModelConstant> constants;
    std::vector<double> y0_default;
    double t_horizon = 0.0;
    int n_samples = 0;
    RhsFnD rhs_d = nullptr;
    RhsFnDual rhs_dual = nullptr;
    /// Free-text notes on interpretation choices (shown on the model card).
    std::vector<std::string> notes;

    std::size_t n_states() const { return state_labels.size(); }
    std::size_t n_params() const { return params.size(); }

    /// Constant values in declaration order, the layout the RHS evaluators
    /// expect for their `c` argument.
    std::vector<double> constant_values() const {
        std::vector<double> v;
        v.reserve(constants.size());
        for (const auto& c : constants) v.push_back(c.value);
        return v;
    }
};

struct ModelSummary {
    std::string model_id;
    int tier;
    std::size_t n_params;
    std::size_t n_states;
};

/// All registered models in fixed order (covid first).
const std::vector<ModelSpec>& model_registry();

/// Lookup by id; throws Error("unknown model ...") listing valid ids.
const ModelSpec& find_model(std::string_view model_id);

/// One summary row per registered model, registry order.
std::vector<ModelSummary> list_models();

/// Evaluates dy/dt at the given state. Validates dimensions and finiteness.
std::vector<double> eval_rhs(const ModelSpec& spec, std::span<const double> state,
                             std::span<const double> params);

/// Draws each parameter independently and uniformly from its range.
/// Deterministic for a given seed.
std::vector<double> sample_params(const ModelSpec& spec, std::uint64_t seed);

/// Returns one message per parameter lying outside its inclusive range;
/// empty result means the vector is valid.
std::vector<std::string> validate_params(const ModelSpec& spec,
                                         std::span<const double> params);

/// Human-readable model card (id, tier, compartments, parameter table,
/// constants, defaults, notes).
std::string model_card_text(const ModelSpec& spec);

/// Same content as the text card, machine-readable.
nlohmann::json model_card_json(const ModelSpec& spec);

} // namespace epifit
