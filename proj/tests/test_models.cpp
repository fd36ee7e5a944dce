#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "epifit/common.hpp"
#include "epifit/dual.hpp"
#include "epifit/models.hpp"
#include "epifit/rng.hpp"

using namespace epifit;

namespace {

// Frozen right-hand-side spot checks. The expected vectors were computed by
// an independent transcription of each tier-1 system (kept outside the
// repo) at the state/parameter points below; agreement is required to a few
// ulp (the two transcriptions may associate products differently).
struct RhsCase {
    const char* model_id;
    std::vector<double> y;
    std::vector<double> params;
    std::vector<double> expected;
};

const std::vector<RhsCase>& rhs_cases() {
    static const std::vector<RhsCase> cases = {
        {"covid",
         {950.0, 30.0, 8.0, 12.0},
         {0.3, 0.05, 0.03},
         {-8.549999999999999, 6.149999999999999, 0.8999999999999999, 1.5}},
        {"hiv",
         {800.0, 50.0, 2000.0},
         {10.0, 0.02, 0.2, 0.3, 2.5, 0.03, 250.0, 1500.0, 2.5e-05, 2e-05},
         {-955.6000000000001, 22.0, -1290.0}},
        {"tuberculosis",
         {2500.0, 400.0, 150.0, 80.0},
         {500.0, 12.0, 1.1, 0.15, 0.6, 3.0, 1.5, 11.0, 0.4},
         {-1456.4696485623003, 81.77891373801918, -67.5, 1412.6907348242812}},
        {"dengue",
         {120.0, 40.0, 25.0, 10.0, 900.0, 80.0, 60.0},
         {10.0, 30.0, 0.05, 0.07, 1.0, 0.06, 0.02, 0.015, 0.6, 0.25, 0.1},
         {1.6, 5.52, -4.0000000000000036, 2.3, -37.5, 32.8, 15.5}},
        {"ebola",
         {900.0, 40.0, 30.0, 15.0, 10.0, 5.0},
         {3.5, 0.01, 0.5, 0.1, 0.25, 0.6, 0.1, 0.5, 0.2, 0.4, 0.5, 0.1, 0.07},
         {-99.135, 95.135, -2.3, 3.18, -3.38, 6.5}},
        {"anthrax",
         {80.0, 15.0, 0.6, 0.4},
         {0.003, 0.0015, 1.0, 0.5, 0.1, 0.01, 0.1, 0.15, 0.06, 100.0, 0.002, 0.1},
         {-25.932065789473683, 25.322236842105262, -0.059199999999999996,
          -0.4075000000000003}},
        {"polio",
         {400.0, 420.0, 50.0, 30.0, 60.0, 40.0},
         {0.02, 0.5, 20.0, 40.0, 45.0, 100.0, 0.25, -0.3},
         {-4180.799999999999, -952.8999999999999, 1966.7999999999995, 568.8999999999997,
          1968.8, 629.2}},
        {"measles",
         {850.0, 90.0, 60.0},
         {0.02, 0.4, 100.0, 35.0},
         {-17.4, -42.60000000000001, -2851.2}},
    };
    return cases;
}

} // namespace

TEST_CASE("registry lists all eleven diseases with expected shapes") {
    const auto& reg = model_registry();
    REQUIRE(reg.size() == 11);

    struct Row {
        const char* id;
        int tier;
        std::size_t n_states, n_params;
    };
    const Row expected[] = {
        {"covid", 1, 4, 3},       {"hiv", 1, 3, 10},      {"smallpox", 2, 8, 8},
        {"tuberculosis", 1, 4, 9}, {"pneumonia", 2, 5, 16}, {"dengue", 1, 7, 11},
        {"ebola", 1, 6, 13},      {"anthrax", 1, 4, 12},  {"polio", 1, 6, 8},
        {"measles", 1, 3, 4},     {"zika", 2, 9, 15},
    };
    for (std::size_t i = 0; i < reg.size(); ++i) {
        CHECK(reg[i].model_id == expected[i].id);
        CHECK(reg[i].tier == expected[i].tier);
        CHECK(reg[i].n_states() == expected[i].n_states);
        CHECK(reg[i].n_params() == expected[i].n_params);
        CHECK(reg[i].state_labels.size() == reg[i].n_states());
        CHECK(reg[i].y0_default.size() == reg[i].n_states());
        CHECK(reg[i].t_horizon > 0.0);
        CHECK(reg[i].n_samples == 100);
    }
}

TEST_CASE("covid ranges and descriptor details") {
    const ModelSpec& m = find_model("covid");
    CHECK(m.params[0].name == "alpha");
    CHECK(m.params[0].range_lo == 0.12);
    CHECK(m.params[0].range_hi == 0.52);
    CHECK(m.params[1].name == "beta");
    CHECK(m.params[1].range_lo == 0.04);
    CHECK(m.params[1].range_hi == 0.06);
    CHECK(m.params[2].name == "gamma");
    CHECK(m.params[2].range_lo == 0.02);
    CHECK(m.params[2].range_hi == 0.04);
    CHECK_FALSE(m.params[0].zero_true);
    CHECK(m.constants.size() == 1);
    CHECK(m.constants[0].name == "N");
    CHECK(m.constants[0].value == 1000.0);
}

TEST_CASE("zero-true parameters are flagged exactly where truth can be zero") {
    // Only ranges that straddle zero are zero-true candidates.
    for (const auto& m : model_registry()) {
        for (const auto& p : m.params) {
            if (p.zero_true) {
                CHECK(p.range_lo < 0.0);
                CHECK(p.range_hi > 0.0);
            }
        }
    }
    const ModelSpec& tb = find_model("tuberculosis");
    CHECK(tb.params[8].name == "d");
    CHECK(tb.params[8].zero_true);
    const ModelSpec& polio = find_model("polio");
    CHECK(polio.params[6].name == "beta_ac");
    CHECK(polio.params[6].zero_true);
    CHECK(polio.params[7].name == "beta_ca");
    CHECK(polio.params[7].zero_true);
}

TEST_CASE("eval_rhs matches the independently computed values") {
    for (const auto& c : rhs_cases()) {
        INFO("model ", c.model_id);
        const ModelSpec& m = find_model(c.model_id);
        std::vector<double> dy = eval_rhs(m, c.y, c.params);
        REQUIRE(dy.size() == c.expected.size());
        for (std::size_t i = 0; i < dy.size(); ++i) {
            INFO("component ", i);
            CHECK(dy[i] == doctest::Approx(c.expected[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("closed-population systems have conserved totals at the rhs level") {
    // Covid and Ebola move population between compartments without birth or
    // death terms, so the component sum of dy/dt vanishes up to rounding.
    for (const char* id : {"covid", "ebola"}) {
        const ModelSpec& m = find_model(id);
        Rng rng(derive_seed(2718, id));
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> params = sample_params(m, rng.next_u64());
            std::vector<double> y(m.n_states());
            double scale = 0.0;
            for (auto& v : y) {
                v = rng.uniform(0.0, 500.0);
                scale += v;
            }
            std::vector<double> dy = eval_rhs(m, y, params);
            double sum = 0.0, mag = 0.0;
            for (double v : dy) {
                sum += v;
                mag += std::abs(v);
            }
            // Rounding bound: a few ulp of the total flow magnitude.
            CHECK(std::abs(sum) <= 1e-12 * std::max(mag, scale));
        }
    }
}

TEST_CASE("rhs evaluation is pure and deterministic") {
    const ModelSpec& m = find_model("anthrax");
    std::vector<double> y = {80.0, 15.0, 0.6, 0.4};
    std::vector<double> p = sample_params(m, 99);
    std::vector<double> a = eval_rhs(m, y, p);
    std::vector<double> y2 = y;
    std::vector<double> p2 = p;
    std::vector<double> b = eval_rhs(m, y2, p2);
    CHECK(a == b);
    CHECK(y == y2); // inputs untouched
    CHECK(p == p2);
}

TEST_CASE("dual-number rhs agrees with the double rhs on values") {
    for (const auto& m : model_registry()) {
        std::vector<double> params = sample_params(m, derive_seed(7, m.model_id));
        std::vector<double> y = m.y0_default;
        // Nudge any zero states so rational terms see generic values.
        for (auto& v : y) {
            if (v == 0.0) v = 0.25;
        }
        std::vector<double> dy = eval_rhs(m, y, params);

        std::vector<Dual1> yd(y.begin(), y.end());
        std::vector<Dual1> pd(params.begin(), params.end());
        std::vector<double> consts = m.constant_values();
        std::vector<Dual1> out(m.n_states());
        m.rhs_dual(yd.data(), pd.data(), consts.data(), out.data());
        for (std::size_t i = 0; i < dy.size(); ++i) {
            // The two instantiations run the same arithmetic but the
            // optimizer may contract multiplies and adds differently, so
            // agreement is to rounding, not bitwise.
            CHECK(out[i].v == doctest::Approx(dy[i]).epsilon(1e-13));
            CHECK(out[i].d == 0.0);
        }
    }
}

TEST_CASE("dual-number rhs directional derivative matches finite differences") {
    for (const char* id : {"covid", "hiv", "tuberculosis", "anthrax"}) {
        const ModelSpec& m = find_model(id);
        std::vector<double> params = sample_params(m, derive_seed(13, id));
        std::vector<double> y = m.y0_default;
        for (auto& v : y) {
            if (v == 0.0) v = 0.5;
        }
        std::vector<double> consts = m.constant_values();

        // Directional derivative along a mixed state+parameter direction.
        Rng rng(derive_seed(17, id));
        std::vector<double> dy_dir(m.n_states()), dp_dir(m.n_params());
        for (auto& v : dy_dir) v = rng.uniform(-1.0, 1.0);
        for (auto& v : dp_dir) v = rng.uniform(-1.0, 1.0);

        std::vector<Dual1> yd(m.n_states()), pd(m.n_params());
        for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = Dual1{y[i], dy_dir[i]};
        for (std::size_t i = 0; i < pd.size(); ++i) pd[i] = Dual1{params[i], dp_dir[i]};
        std::vector<Dual1> out(m.n_states());
        m.rhs_dual(yd.data(), pd.data(), consts.data(), out.data());

        const double eps = 1e-6;
        std::vector<double> yp(y), ym(y), pp(params), pm(params);
        for (std::size_t i = 0; i < y.size(); ++i) {
            yp[i] += eps * dy_dir[i];
            ym[i] -= eps * dy_dir[i];
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            pp[i] += eps * dp_dir[i];
            pm[i] -= eps * dp_dir[i];
        }
        std::vector<double> fp = eval_rhs(m, yp, pp);
        std::vector<double> fm = eval_rhs(m, ym, pm);
        for (std::size_t i = 0; i < out.size(); ++i) {
            double fd = (fp[i] - fm[i]) / (2.0 * eps);
            double scale = std::max({1.0, std::abs(fd), std::abs(out[i].d)});
            CHECK(std::abs(out[i].d - fd) <= 1e-5 * scale);
        }
    }
}

TEST_CASE("sample_params respects ranges and reproduces by seed") {
    for (const auto& m : model_registry()) {
        std::vector<double> a = sample_params(m, 42);
        std::vector<double> b = sample_params(m, 42);
        std::vector<double> c = sample_params(m, 43);
        CHECK(a == b);
        CHECK(a != c);
        REQUIRE(a.size() == m.n_params());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] >= m.params[i].range_lo);
            CHECK(a[i] < m.params[i].range_hi);
        }
    }
}

TEST_CASE("covid sample_params known draws") {
    // Frozen from the independent generator: three uniforms over the covid
    // ranges from seed 42.
    const ModelSpec& m = find_model("covid");
    std::vector<double> v = sample_params(m, 42);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == doctest::Approx(0.41662595150872933).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(0.043198207857538404).epsilon(1e-15));
    CHECK(v[2] == doctest::Approx(0.025572022605102773).epsilon(1e-15));
}

TEST_CASE("validate_params flags out-of-range entries by name") {
    const ModelSpec& m = find_model("covid");
    CHECK(validate_params(m, std::vector<double>{0.3, 0.05, 0.03}).empty());
    auto violations = validate_params(m, std::vector<double>{0.6, 0.05, 0.01});
    REQUIRE(violations.size() == 2);
    CHECK(violations[0].find("alpha") != std::string::npos);
    CHECK(violations[1].find("gamma") != std::string::npos);
}

TEST_CASE("eval_rhs rejects malformed inputs") {
    const ModelSpec& m = find_model("covid");
    CHECK_THROWS_AS(eval_rhs(m, std::vector<double>{1.0, 2.0}, std::vector<double>{0.3, 0.05, 0.03}),
                    DimensionError);
    CHECK_THROWS_AS(eval_rhs(m, std::vector<double>{1, 2, 3, 4}, std::vector<double>{0.3}),
                    DimensionError);
    CHECK_THROWS_AS(validate_params(m, std::vector<double>{0.3}), DimensionError);
}

TEST_CASE("find_model reports the unknown id and the available ones") {
    try {
        find_model("plague");
        FAIL("expected Error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("plague") != std::string::npos);
        CHECK(msg.find("covid") != std::string::npos);
    }
}

TEST_CASE("model cards render every parameter and constant") {
    for (const auto& m : model_registry()) {
        std::string card = model_card_text(m);
        for (const auto& p : m.params) CHECK(card.find(p.name) != std::string::npos);
        for (const auto& c : m.constants) CHECK(card.find(c.name) != std::string::npos);
        auto j = model_card_json(m);
        CHECK(j["model_id"] == m.model_id);
        CHECK(j["params"].size() == m.n_params());
        CHECK(j["states"].size() == m.n_states());
    }
}
