#include <doctest.h>

#include <cmath>
#include <vector>

#include "epifit/common.hpp"
#include "epifit/metrics.hpp"
#include "epifit/models.hpp"
#include "epifit/solver.hpp"

using namespace epifit;

TEST_CASE("relative percentage error on the factor-of-two case") {
    ParamError e = param_error(0.2, 0.1, false);
    CHECK(e.kind == MetricKind::RelL2Pct);
    CHECK(e.value == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("perfect prediction scores zero") {
    CHECK(param_error(0.37, 0.37, false).value == 0.0);
    CHECK(param_error(0.0, 0.0, true).value == 0.0);
}

TEST_CASE("zero-true parameters fall back to absolute error") {
    // A coefficient whose true value is zero cannot carry a relative error;
    // the benchmark convention reports |pred| instead.
    ParamError e = param_error(0.012, 0.0, true);
    CHECK(e.kind == MetricKind::Mae);
    CHECK(e.value == doctest::Approx(0.012).epsilon(1e-12));
}

TEST_CASE("relative error depends only on the gap magnitude") {
    double a = param_error(0.5, 0.4, false).value;
    double b = param_error(0.3, 0.4, false).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("a zero truth without the zero-true flag is a configuration error") {
    CHECK_THROWS_AS(param_error(0.1, 0.0, false), Error);
}

TEST_CASE("non-finite inputs are rejected") {
    CHECK_THROWS_AS(param_error(std::nan(""), 1.0, false), Error);
    CHECK_THROWS_AS(param_error(1.0, std::nan(""), false), Error);
}

TEST_CASE("two-task pool gives mean 2 and population std 1") {
    // Errors of 1% and 3% over one non-zero parameter and two tasks.
    const ModelSpec& m = find_model("covid");
    std::vector<EstimatePair> pairs;
    // covid alpha truth 0.2: predictions 1% and 3% high; beta/gamma exact.
    pairs.push_back({{0.202, 0.05, 0.03}, {0.2, 0.05, 0.03}});
    pairs.push_back({{0.206, 0.05, 0.03}, {0.2, 0.05, 0.03}});
    EvalReport rep = evaluate(m, pairs);
    CHECK(rep.n_tasks == 2);
    REQUIRE(rep.per_param.size() == 3);
    CHECK(rep.per_param[0].mean == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(rep.per_param[0].std_dev == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.per_param[1].mean == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("aggregate pools every non-zero-true parameter across tasks") {
    const ModelSpec& m = find_model("covid");
    std::vector<EstimatePair> pairs;
    pairs.push_back({{0.202, 0.0505, 0.0303}, {0.2, 0.05, 0.03}});
    EvalReport rep = evaluate(m, pairs);
    // Three pooled errors of exactly 1% each.
    CHECK(rep.aggregate_n == 3);
    CHECK(rep.aggregate_mean == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.aggregate_std == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("aggregate mean equals the weighted mean of per-parameter means") {
    const ModelSpec& m = find_model("covid");
    std::vector<EstimatePair> pairs;
    pairs.push_back({{0.22, 0.055, 0.033}, {0.2, 0.05, 0.03}});
    pairs.push_back({{0.18, 0.045, 0.0315}, {0.2, 0.05, 0.03}});
    pairs.push_back({{0.21, 0.052, 0.024}, {0.2, 0.05, 0.03}});
    EvalReport rep = evaluate(m, pairs);
    double weighted = 0.0;
    for (const auto& ps : rep.per_param) weighted += ps.mean;
    weighted /= static_cast<double>(rep.per_param.size());
    CHECK(rep.aggregate_mean == doctest::Approx(weighted).epsilon(1e-9));
}

TEST_CASE("zero-true parameters are excluded from the aggregate pool") {
    const ModelSpec& m = find_model("tuberculosis"); // d is zero-true
    std::vector<double> truth = sample_params(m, 1);
    truth[8] = 0.0;
    std::vector<double> pred = truth;
    pred[8] = 0.012;
    EvalReport rep = evaluate(m, {{pred, truth}});
    CHECK(rep.aggregate_n == 8); // nine params, one zero-true
    CHECK(rep.aggregate_mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(rep.per_param[8].kind == MetricKind::Mae);
    CHECK(rep.per_param[8].mean == doctest::Approx(0.012).epsilon(1e-12));
}

TEST_CASE("evaluate validates its inputs") {
    const ModelSpec& m = find_model("covid");
    CHECK_THROWS_AS(evaluate(m, {}), Error);
    std::vector<EstimatePair> bad;
    bad.push_back({{0.2, 0.05}, {0.2, 0.05, 0.03}});
    CHECK_THROWS_AS(evaluate(m, bad), DimensionError);
}

TEST_CASE("wall statistics appear only when provided") {
    const ModelSpec& m = find_model("covid");
    std::vector<EstimatePair> pairs;
    pairs.push_back({{0.2, 0.05, 0.03}, {0.2, 0.05, 0.03}});
    EvalReport plain = evaluate(m, pairs);
    CHECK_FALSE(plain.has_wall);

    std::vector<double> walls = {0.25};
    EvalReport timed = evaluate(m, pairs, walls);
    CHECK(timed.has_wall);
    CHECK(timed.wall_mean_s == doctest::Approx(0.25));
    CHECK(timed.wall_max_s == doctest::Approx(0.25));
}

TEST_CASE("peak of a monotone decreasing channel sits at the first grid point") {
    Trajectory traj;
    traj.model_id = "covid";
    traj.t_grid = {0.0, 1.0, 2.0, 3.0};
    traj.states.resize(4, 1);
    traj.states << 5.0, 4.0, 3.0, 2.0;
    PeakStats p = peak_stats(traj, 0);
    CHECK(p.index == 0);
    CHECK(p.t_peak == 0.0);
    CHECK(p.y_peak == 5.0);
}

TEST_CASE("peak ties break toward the earliest time") {
    Trajectory traj;
    traj.model_id = "covid";
    traj.t_grid = {0.0, 1.0, 2.0, 3.0};
    traj.states.resize(4, 1);
    traj.states << 1.0, 7.0, 7.0, 2.0;
    PeakStats p = peak_stats(traj, 0);
    CHECK(p.index == 1);
    CHECK(p.t_peak == 1.0);
}

TEST_CASE("peak statistics reject invalid channels") {
    Trajectory traj;
    traj.model_id = "covid";
    traj.t_grid = {0.0, 1.0};
    traj.states = Eigen::MatrixXd::Zero(2, 3);
    CHECK_THROWS_AS(peak_stats(traj, 3), Error);
    CHECK_THROWS_AS(peak_stats(traj, -1), Error);
}

TEST_CASE("reports render every parameter row plus the aggregate") {
    const ModelSpec& m = find_model("covid");
    std::vector<EstimatePair> pairs;
    pairs.push_back({{0.22, 0.055, 0.033}, {0.2, 0.05, 0.03}});
    EvalReport rep = evaluate(m, pairs);

    std::string text = report_text(rep);
    CHECK(text.find("alpha") != std::string::npos);
    CHECK(text.find("beta") != std::string::npos);
    CHECK(text.find("gamma") != std::string::npos);
    CHECK(text.find("aggregate") != std::string::npos);

    auto j = report_json(rep);
    CHECK(j["model_id"] == "covid");
    CHECK(j["per_param"].size() == 3);
    CHECK(j["aggregate"]["n"] == 3);
}
