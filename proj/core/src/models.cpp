#include "epifit/models.hpp"

#include <cmath>
#include <sstream>

#include "epifit/common.hpp"
#include "epifit/rng.hpp"

namespace epifit {

namespace {

// Right-hand sides are templated on the scalar so the same definition serves
// plain evaluation (double) and directional derivatives (Dual1). `p` holds
// the estimated parameters in descriptor order, `c` the fixed constants in
// declaration order. All systems are autonomous.

// Covid SIDR. States S, I, D, R; params alpha, beta, gamma; constant N.
// beta is the recovery rate (feeds R), gamma the death rate (feeds D).
template <typename S>
void covid_rhs(const S* y, const S* p, const double* c, S* dy) {
    const double N = c[0];
    S infection = p[0] * y[0] * y[1] / N;
    S deaths = p[2] * y[1];
    S recoveries = p[1] * y[1];
    dy[0] = -infection;
    dy[1] = infection - recoveries - deaths;
    dy[2] = deaths;
    dy[3] = recoveries;
}

// HIV within-host. States T, I, V;
// params s, mu_T, mu_I, mu_b, mu_V, r, N, T_max, k_1, k_1p.
// The -k_1 V T term sits inside the logistic bracket, so the proliferation
// term contributes r*T*(-k_1*V*T); kept as written in the source table.
template <typename S>
void hiv_rhs(const S* y, const S* p, const double*, S* dy) {
    const S& T = y[0];
    const S& I = y[1];
    const S& V = y[2];
    dy[0] = p[0] - p[1] * T + p[5] * T * (1.0 - (T + I) / p[7] - p[8] * V * T);
    dy[1] = p[9] * V * T - p[2] * I;
    dy[2] = p[6] * p[3] * I - p[8] * V * T - p[4] * V;
}

// Tuberculosis. States S, L, I, T (T = under treatment);
// params delta, beta, c, mu, k, r_1, r_2, beta_p, d. N = S+L+I+T is dynamic.
// The treatment relapse term beta_p*c*T/N carries no I factor; kept as
// written in the source table.
template <typename S>
void tuberculosis_rhs(const S* y, const S* p, const double*, S* dy) {
    S N = y[0] + y[1] + y[2] + y[3];
    S infection = p[1] * p[2] * y[0] * y[2] / N;
    S relapse = p[7] * p[2] * y[3] / N;
    dy[0] = p[0] - infection - p[3] * y[0];
    dy[1] = infection - (p[3] + p[4] + p[5]) * y[1] + relapse;
    dy[2] = p[4] * y[1] - (p[3] + p[8]) * y[2] - p[6] * y[2];
    dy[3] = p[5] * y[1] + p[6] * y[2] - relapse - p[3] * y[3];
}

// Dengue host-vector. States Sb, Eb, Ib, Rb, Sv, Ev, Iv;
// params pi_b, pi_v, lambda_b, lambda_v, delta_b, delta_v, mu_b, mu_v,
// sigma_b, sigma_v, tau_b.
// Eb's outflow rate is the product sigma_b*mu_b (not a sum), and lambda_v
// does not enter the dynamics at all; both kept as written in the source
// table (lambda_v is still sampled so parameter vectors stay aligned).
template <typename S>
void dengue_rhs(const S* y, const S* p, const double*, S* dy) {
    dy[0] = p[0] - p[2] * y[0] - p[6] * y[0];
    dy[1] = p[2] * y[0] - (p[8] * p[6]) * y[1];
    dy[2] = p[8] * y[1] - (p[10] + p[6] + p[4]) * y[2];
    dy[3] = p[10] * y[2] - p[6] * y[3];
    dy[4] = p[1] - p[5] * y[4] - p[7] * y[4];
    dy[5] = p[5] * y[4] - (p[9] + p[7]) * y[5];
    dy[6] = p[9] * y[5] - (p[7] + p[5]) * y[6];
}

// Ebola with hospital and funeral transmission. States S, E, I, H, F, R;
// params beta_1, beta_b, beta_f, alpha, gamma_b, theta_1, gamma_i, delta_1,
// gamma_d, delta_2, gamma_f, gamma_ib, gamma_db; constant N.
template <typename S>
void ebola_rhs(const S* y, const S* p, const double* c, S* dy) {
    const double N = c[0];
    S force = (p[0] * y[0] * y[2] + p[1] * y[0] * y[3] + p[2] * y[0] * y[4]) / N;
    S hospital = p[4] * p[5];                            // gamma_b theta_1
    S recover = p[6] * (1.0 - p[5]) * (1.0 - p[7]);      // gamma_i (1-theta_1)(1-delta_1)
    S death = p[8] * (1.0 - p[5]) * p[7];                // gamma_d (1-theta_1) delta_1
    dy[0] = -force;
    dy[1] = force - p[3] * y[1];
    dy[2] = p[3] * y[1] - (hospital + recover + death) * y[2];
    dy[3] = hospital * y[2] - (p[12] * p[9] + p[11] * (1.0 - p[9])) * y[3];
    dy[4] = death * y[2] + p[12] * p[9] * y[3] - p[10] * y[4];
    dy[5] = recover * y[2] + p[11] * (1.0 - p[9]) * y[3] + p[10] * y[4];
}

// Anthrax in an animal population with carcass and spore compartments.
// States S, I, A, C; params r, mu, kappa, eta_a, eta_c, eta_i, tau, gamma,
// delta, K, beta, sigma.
// In dI the direct-contact term eta_i*S*I/(S+I) is multiplied by a further
// factor I while dS loses only eta_i*S*I/(S+I); kept as written in the
// source table even though the two flows are asymmetric.
template <typename S>
void anthrax_rhs(const S* y, const S* p, const double*, S* dy) {
    S herd = y[0] + y[1];
    S spore = p[3] * y[2] * y[0];    // eta_a A S
    S carcass = p[4] * y[0] * y[3];  // eta_c S C
    S direct = p[5] * y[0] * y[1] / herd;
    dy[0] = p[0] * herd * (1.0 - herd / p[9]) - spore - carcass - direct - p[1] * y[0] +
            p[6] * y[1];
    dy[1] = spore + carcass + (direct - (p[7] + p[1] + p[6])) * y[1];
    dy[2] = -p[11] * y[2] + p[10] * y[3];
    dy[3] = (p[7] + p[1]) * y[1] - p[8] * herd * y[3] - p[2] * y[3];
}

// Polio with child/adult age structure. States Sc, Sa, Ic, Ia, Rc, Ra;
// params mu, alpha, gamma_a, gamma_c, beta_aa, beta_cc, beta_ac, beta_ca;
// constants N, Nc, Na. beta_ac and beta_ca may be sampled negative.
template <typename S>
void polio_rhs(const S* y, const S* p, const double* c, S* dy) {
    const double N = c[0], Nc = c[1], Na = c[2];
    S force_c = (p[5] / Nc) * y[2] + (p[7] / Nc) * y[3];
    S force_a = (p[6] / Na) * y[2] + (p[4] / Na) * y[3];
    dy[0] = p[0] * N - (p[1] + p[0] + force_c) * y[0];
    dy[1] = p[1] * y[0] - (p[0] + force_a) * y[1];
    dy[2] = force_c * y[0] - (p[3] + p[1] + p[0]) * y[2];
    dy[3] = force_a * y[1] - (p[2] + p[0]) * y[3] + p[1] * y[2];
    dy[4] = p[3] * y[2] - p[0] * y[4] - p[1] * y[4];
    dy[5] = p[2] * y[3] - p[0] * y[5] + p[1] * y[4];
}

// Measles SEI. States S, E, I; params mu, beta_1, gamma, sigma; constant N.
// E's outflow rate is the product mu*sigma while I gains sigma*E; the two
// flows are asymmetric but kept as written in the source table.
template <typename S>
void measles_rhs(const S* y, const S* p, const double* c, S* dy) {
    const double N = c[0];
    S infection = p[1] * y[0] * y[2] / N;
    dy[0] = p[0] * (N - y[0]) - infection;
    dy[1] = infection - (p[0] * p[3]) * y[1];
    dy[2] = p[3] * y[1] - (p[0] + p[2]) * y[2];
}

// Small pox with quarantine and vaccination (tier 2).
// States S, En, Ei, Ci, I, Q, U, V;
// params chi_1, chi_2, eps_1, eps_2, rho, theta, alpha, gamma;
// constants beta, phi.
// Interpretation of the corrupted source: the two unnamed vaccination
// efficacies are eps_1 and eps_2, and the mixed rate "chi_12" is read as
// chi_1.
template <typename S>
void smallpox_rhs(const S* y, const S* p, const double* c, S* dy) {
    const double beta = c[0], phi = c[1];
    S SI = y[0] * y[4];
    dy[0] = p[0] * (1.0 - p[2]) * y[3] - beta * (phi + p[4] - phi * p[4]) * SI;
    dy[1] = beta * phi * (1.0 - p[4]) * SI - p[6] * y[1];
    dy[2] = beta * phi * p[4] * SI - (p[0] + p[6] * (1.0 - p[3])) * y[2];
    dy[3] = beta * p[4] * (1.0 - phi) * SI - p[0] * y[3];
    dy[4] = p[6] * (1.0 - p[5]) * y[1] - (p[5] + p[7]) * y[4];
    dy[5] = p[6] * (1.0 - p[3]) * y[2] + p[5] * (p[6] * y[1] + y[4]) - p[1] * y[5];
    dy[6] = p[7] * y[4] + p[1] * y[5];
    dy[7] = p[0] * (p[3] * y[2] + p[2] * y[3]);
}

// Pneumonia with vaccination and carriers (tier 2). States S, V, C, I, R;
// params pi, lambda, k, chi_a, tau, phi, chi_b, p, theta, mu, alpha, rho,
// beta, eta, q, delta.
// The source lists chi twice with different ranges; the C-outflow rate is
// read as chi_a and the I-inflow rate as chi_b. lambda is a free parameter
// (not a derived force of infection), and k and tau have sampling ranges but
// never enter the dynamics; they are sampled and carried unchanged.
template <typename S>
void pneumonia_rhs(const S* y, const S* p, const double*, S* dy) {
    dy[0] = (1.0 - p[7]) * p[0] + p[5] * y[1] + p[15] * y[4] - (p[9] + p[1] + p[8]) * y[0];
    dy[1] = p[7] * p[0] + p[8] * y[0] - (p[9] + p[1] + p[5]) * y[1];
    dy[2] = p[11] * p[1] * y[0] + p[11] * p[1] * y[1] + (1.0 - p[14]) * p[13] * y[3] -
            (p[9] + p[12] + p[3]) * y[2];
    dy[3] = (1.0 - p[11]) * p[1] * y[0] + (1.0 - p[11]) * p[1] * y[1] + p[6] * y[2] -
            (p[9] + p[10] + p[13]) * y[3];
    dy[4] = p[12] * y[2] + p[14] * p[13] * y[3] - (p[9] + p[15]) * y[4];
}

// Zika with two infectious human stages and a vector population (tier 2).
// States Sb, Eb, Ib1, Ib2, Ab, Rb, Sv, Ev, Iv;
// params a, b, c, eta, beta, kappa, tau, theta, m, V_b, V_v, gamma_b1,
// gamma_b2, gamma_b, mu_v; constant Nb.
// Interpretation of the corrupted source: the infection inflows into Eb and
// Ab are positive, N_v = m*Nb, and the vector exposure term is proportional
// to Sv.
template <typename S>
void zika_rhs(const S* y, const S* p, const double* c, S* dy) {
    const double Nb = c[0];
    S vector_force = p[0] * p[1] * (y[8] / Nb) * y[0];
    S human_force = p[4] * ((p[5] * y[1] + y[2] + p[6] * y[3]) / Nb) * y[0];
    S exposure = vector_force + human_force;
    dy[0] = -vector_force - human_force;
    dy[1] = p[7] * exposure - p[9] * y[1];
    dy[2] = p[9] * y[1] - p[11] * y[2];
    dy[3] = p[11] * y[2] - p[12] * y[3];
    dy[4] = (1.0 - p[7]) * exposure - p[13] * y[4];
    dy[5] = p[12] * y[3] + p[13] * y[4];
    S Nv = p[8] * Nb;
    S bite = p[0] * p[2] * ((p[3] * y[1] + y[2]) / Nb) * y[6];
    dy[6] = p[14] * Nv - bite - p[14] * y[6];
    dy[7] = bite - (p[10] + p[14]) * y[7];
    dy[8] = p[10] * y[7] - p[14] * y[8];
}

ParamDescriptor pd(std::string name, double lo, double hi, bool zero_true = false) {
    return ParamDescriptor{std::move(name), lo, hi, zero_true};
}

std::vector<ModelSpec> build_registry() {
    std::vector<ModelSpec> models;

    {
        ModelSpec m;
        m.model_id = "covid";
        m.display_name = "Covid-19 (SIDR)";
        m.tier = 1;
        m.state_labels = {"S", "I", "D", "R"};
        m.params = {pd("alpha", 0.12, 0.52), pd("beta", 0.04, 0.06), pd("gamma", 0.02, 0.04)};
        m.constants = {{"N", 1000.0}};
        m.y0_default = {999.0, 1.0, 0.0, 0.0};
        m.t_horizon = 200.0;
        m.n_samples = 100;
        m.rhs_d = &covid_rhs<double>;
        m.rhs_dual = &covid_rhs<Dual1>;
        m.notes = {"beta is the recovery rate (feeds R); gamma is the death rate (feeds D).",
                   "Closed population: the component sum of dy/dt is identically zero."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "hiv";
        m.display_name = "HIV (within-host)";
        m.tier = 1;
        m.state_labels = {"T", "I", "V"};
        m.params = {pd("s", 5, 15),         pd("mu_T", 0.005, 0.045), pd("mu_I", 0.05, 0.45),
                    pd("mu_b", 0.05, 0.45), pd("mu_V", 2, 3),         pd("r", 0.01, 0.05),
                    pd("N", 225, 275),      pd("T_max", 1400, 1600),  pd("k_1", 2e-5, 3e-5),
                    pd("k_1p", 1.5e-5, 2.5e-5)};
        m.y0_default = {1000.0, 0.0, 1e-3};
        m.t_horizon = 500.0;
        m.n_samples = 100;
        m.rhs_d = &hiv_rhs<double>;
        m.rhs_dual = &hiv_rhs<Dual1>;
        m.notes = {"The -k_1 V T term sits inside the logistic bracket of dT/dt."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "smallpox";
        m.display_name = "Small Pox";
        m.tier = 2;
        m.state_labels = {"S", "En", "Ei", "Ci", "I", "Q", "U", "V"};
        m.params = {pd("chi_1", 0.04, 0.08), pd("chi_2", 0.02, 0.06), pd("eps_1", 0.75, 1.25),
                    pd("eps_2", 0.1, 0.5),   pd("rho", 0.9, 1.1),     pd("theta", 0.5, 1.5),
                    pd("alpha", 0.02, 0.1),  pd("gamma", 0.05, 0.15)};
        m.constants = {{"beta", 1.0}, {"phi", 0.5}};
        m.y0_default = {0.95, 0.0, 0.0, 0.0, 0.05, 0.0, 0.0, 0.0};
        m.t_horizon = 100.0;
        m.n_samples = 100;
        m.rhs_d = &smallpox_rhs<double>;
        m.rhs_dual = &smallpox_rhs<Dual1>;
        m.notes = {"Tier 2: the source equations drop two subscripted symbols; they are read "
                   "as vaccination efficacies eps_1 and eps_2, and the rate chi_12 as chi_1.",
                   "beta and phi are fixed constants; states are population fractions."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "tuberculosis";
        m.display_name = "Tuberculosis";
        m.tier = 1;
        m.state_labels = {"S", "L", "I", "T"};
        m.params = {pd("delta", 450, 550), pd("beta", 5, 25),     pd("c", 0.3, 1.7),
                    pd("mu", 0.08, 0.22),  pd("k", 0.05, 1.2),    pd("r_1", 0.5, 5.5),
                    pd("r_2", 0.4, 2.4),   pd("beta_p", 5, 20),   pd("d", -1, 1, true)};
        m.y0_default = {3000.0, 0.0, 100.0, 0.0};
        m.t_horizon = 25.0;
        m.n_samples = 100;
        m.rhs_d = &tuberculosis_rhs<double>;
        m.rhs_dual = &tuberculosis_rhs<Dual1>;
        m.notes = {"N = S+L+I+T is dynamic.",
                   "d may be sampled negative, which makes the infectious stage grow."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "pneumonia";
        m.display_name = "Pneumonia";
        m.tier = 2;
        m.state_labels = {"S", "V", "C", "I", "R"};
        m.params = {pd("pi", 0.005, 0.015),      pd("lambda", 0.05, 0.15),
                    pd("k", 0.3, 0.7),           pd("chi_a", 0.0005, 0.0045),
                    pd("tau", 0.6, 1.2),         pd("phi", 0.0005, 0.0045),
                    pd("chi_b", 0.0005, 0.0015), pd("p", 0.1, 0.3),
                    pd("theta", 0.005, 0.011),   pd("mu", 0.005, 0.015),
                    pd("alpha", 0.04, 0.08),     pd("rho", 0.01, 0.09),
                    pd("beta", 0.0085, 0.0145),  pd("eta", 0.1, 0.3),
                    pd("q", 0.3, 0.7),           pd("delta", 0.05, 0.15)};
        m.y0_default = {0.6, 0.2, 0.1, 0.1, 0.0};
        m.t_horizon = 100.0;
        m.n_samples = 100;
        m.rhs_d = &pneumonia_rhs<double>;
        m.rhs_dual = &pneumonia_rhs<Dual1>;
        m.notes = {"Tier 2: the source lists chi twice; the C-outflow rate is chi_a and the "
                   "I-inflow rate chi_b.",
                   "lambda is a free parameter, not a derived force of infection.",
                   "k and tau have sampling ranges but never enter the dynamics.",
                   "theta's published upper bound (0.0011) lies below its lower bound and "
                   "below the reference value 0.008; the range is read as (0.005, 0.011).",
                   "States are population fractions."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "dengue";
        m.display_name = "Dengue";
        m.tier = 1;
        m.state_labels = {"Sb", "Eb", "Ib", "Rb", "Sv", "Ev", "Iv"};
        m.params = {pd("pi_b", 5, 15),          pd("pi_v", 25, 35),
                    pd("lambda_b", 0.01, 0.09), pd("lambda_v", 0.01, 0.09),
                    pd("delta_b", 0.75, 1.25),  pd("delta_v", 0.04, 0.08),
                    pd("mu_b", 0.0175, 0.0225), pd("mu_v", 0.006, 0.026),
                    pd("sigma_b", 0.4, 0.8),    pd("sigma_v", 0.05, 0.45),
                    pd("tau_b", 0.05, 0.15)};
        m.y0_default = {100.0, 10.0, 5.0, 0.0, 1000.0, 10.0, 5.0};
        m.t_horizon = 150.0;
        m.n_samples = 100;
        m.rhs_d = &dengue_rhs<double>;
        m.rhs_dual = &dengue_rhs<Dual1>;
        m.notes = {"Eb's outflow rate is the product sigma_b*mu_b.",
                   "lambda_v is sampled but does not enter the dynamics; it is carried so "
                   "parameter vectors stay aligned with the coefficient table."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "ebola";
        m.display_name = "Ebola";
        m.tier = 1;
        m.state_labels = {"S", "E", "I", "H", "F", "R"};
        m.params = {pd("beta_1", 3, 4),         pd("beta_b", 0.005, 0.015),
                    pd("beta_f", 0.3, 0.7),     pd("alpha", 0.05, 0.15),
                    pd("gamma_b", 0.05, 0.45),  pd("theta_1", 0.4, 0.8),
                    pd("gamma_i", 0.05, 0.15),  pd("delta_1", 0.3, 0.9),
                    pd("gamma_d", 0.1, 0.3),    pd("delta_2", 0.2, 0.8),
                    pd("gamma_f", 0.2, 0.8),    pd("gamma_ib", 0.05, 0.15),
                    pd("gamma_db", 0.03, 0.12)};
        m.constants = {{"N", 1000.0}};
        m.y0_default = {999.0, 0.0, 1.0, 0.0, 0.0, 0.0};
        m.t_horizon = 60.0;
        m.n_samples = 100;
        m.rhs_d = &ebola_rhs<double>;
        m.rhs_dual = &ebola_rhs<Dual1>;
        m.notes = {"Transmission from infectious (I), hospitalized (H) and funeral (F) "
                   "compartments; the component sum of dy/dt is identically zero."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "anthrax";
        m.display_name = "Anthrax";
        m.tier = 1;
        m.state_labels = {"S", "I", "A", "C"};
        m.params = {pd("r", 0.002, 0.004),   pd("mu", 0.001, 0.002), pd("kappa", 0.75, 1.25),
                    pd("eta_a", 0.25, 0.75), pd("eta_c", 0.05, 0.15), pd("eta_i", 0.005, 0.015),
                    pd("tau", 0.05, 0.15),   pd("gamma", 0.05, 0.25), pd("delta", 0.01, 0.11),
                    pd("K", 75, 125),        pd("beta", 0.001, 0.003), pd("sigma", 0.05, 0.15)};
        m.y0_default = {90.0, 10.0, 0.5, 0.5};
        m.t_horizon = 200.0;
        m.n_samples = 100;
        m.rhs_d = &anthrax_rhs<double>;
        m.rhs_dual = &anthrax_rhs<Dual1>;
        m.notes = {"In dI/dt the direct-contact term eta_i*S*I/(S+I) is multiplied by a "
                   "further factor I, asymmetric to the matching loss in dS/dt."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "polio";
        m.display_name = "Polio";
        m.tier = 1;
        m.state_labels = {"Sc", "Sa", "Ic", "Ia", "Rc", "Ra"};
        m.params = {pd("mu", 0.01, 0.03),  pd("alpha", 0.25, 0.75),
                    pd("gamma_a", 10, 30), pd("gamma_c", 20, 60),
                    pd("beta_aa", 25, 65), pd("beta_cc", 75, 125),
                    pd("beta_ac", -0.5, 0.5, true), pd("beta_ca", -0.5, 0.5, true)};
        m.constants = {{"N", 1000.0}, {"Nc", 500.0}, {"Na", 500.0}};
        m.y0_default = {450.0, 450.0, 30.0, 20.0, 25.0, 25.0};
        m.t_horizon = 1.5;
        m.n_samples = 100;
        m.rhs_d = &polio_rhs<double>;
        m.rhs_dual = &polio_rhs<Dual1>;
        m.notes = {"beta_ac and beta_ca are sampled over (-0.5, 0.5) including negative "
                   "values, exactly as ranged in the coefficient table."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "measles";
        m.display_name = "Measles";
        m.tier = 1;
        m.state_labels = {"S", "E", "I"};
        m.params = {pd("mu", 0.01, 0.03), pd("beta_1", 0.15, 0.55), pd("gamma", 75, 125),
                    pd("sigma", 20, 50)};
        m.constants = {{"N", 1000.0}};
        m.y0_default = {900.0, 60.0, 40.0};
        m.t_horizon = 5.0;
        m.n_samples = 100;
        m.rhs_d = &measles_rhs<double>;
        m.rhs_dual = &measles_rhs<Dual1>;
        m.notes = {"E's outflow rate is the product mu*sigma while I gains sigma*E; the "
                   "asymmetry is kept as written in the source table."};
        models.push_back(std::move(m));
    }
    {
        ModelSpec m;
        m.model_id = "zika";
        m.display_name = "Zika";
        m.tier = 2;
        m.state_labels = {"Sb", "Eb", "Ib1", "Ib2", "Ab", "Rb", "Sv", "Ev", "Iv"};
        m.params = {pd("a", 0.3, 0.7),          pd("b", 0.2, 0.6),
                    pd("c", 0.3, 0.7),          pd("eta", 0.05, 0.15),
                    pd("beta", 0.045, 0.055),   pd("kappa", 0.2, 1.0),
                    pd("tau", 0.1, 0.5),        pd("theta", 10, 30),
                    pd("m", 3, 7),              pd("V_b", 0.175, 0.225),
                    pd("V_v", 7.5, 12.5),       pd("gamma_b1", 0.1, 0.3),
                    pd("gamma_b2", 0.03, 0.07), pd("gamma_b", 0.12, 0.18),
                    pd("mu_v", 0.05, 0.09)};
        m.constants = {{"Nb", 1000.0}};
        m.y0_default = {990.0, 5.0, 5.0, 0.0, 0.0, 0.0, 4000.0, 0.0, 20.0};
        m.t_horizon = 100.0;
        m.n_samples = 100;
        m.rhs_d = &zika_rhs<double>;
        m.rhs_dual = &zika_rhs<Dual1>;
        m.notes = {"Tier 2: infection inflows into Eb and Ab are taken positive, the vector "
                   "population is N_v = m*Nb, and the vector exposure term is proportional "
                   "to Sv; all three repair sign/omission defects in the source equations.",
                   "theta scales the exposed inflow and is sampled in (10, 30)."};
        models.push_back(std::move(m));
    }

    return models;
}

} // namespace

const std::vector<ModelSpec>& model_registry() {
    static const std::vector<ModelSpec> registry = build_registry();
    return registry;
}

const ModelSpec& find_model(std::string_view model_id) {
    for (const auto& m : model_registry()) {
        if (m.model_id == model_id) return m;
    }
    std::string msg = "unknown model '" + std::string(model_id) + "'; available:";
    for (const auto& m : model_registry()) msg += " " + m.model_id;
    throw Error(msg);
}

std::vector<ModelSummary> list_models() {
    std::vector<ModelSummary> out;
    for (const auto& m : model_registry()) {
        out.push_back({m.model_id, m.tier, m.n_params(), m.n_states()});
    }
    return out;
}

std::vector<double> eval_rhs(const ModelSpec& spec, std::span<const double> state,
                             std::span<const double> params) {
    if (state.size() != spec.n_states()) {
        throw DimensionError("state has " + std::to_string(state.size()) + " entries, " +
                             spec.model_id + " has " + std::to_string(spec.n_states()) +
                             " compartments");
    }
    if (params.size() != spec.n_params()) {
        throw DimensionError("parameter vector has " + std::to_string(params.size()) +
                             " entries, " + spec.model_id + " has " +
                             std::to_string(spec.n_params()) + " parameters");
    }
    for (double v : state) {
        if (!std::isfinite(v)) throw DimensionError("non-finite state entry");
    }
    for (double v : params) {
        if (!std::isfinite(v)) throw DimensionError("non-finite parameter entry");
    }
    std::vector<double> consts = spec.constant_values();
    std::vector<double> dy(spec.n_states());
    spec.rhs_d(state.data(), params.data(), consts.data(), dy.data());
    return dy;
}

std::vector<double> sample_params(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> values;
    values.reserve(spec.n_params());
    for (const auto& d : spec.params) {
        values.push_back(rng.uniform(d.range_lo, d.range_hi));
    }
    return values;
}

std::vector<std::string> validate_params(const ModelSpec& spec,
                                         std::span<const double> params) {
    if (params.size() != spec.n_params()) {
        throw DimensionError("parameter vector has " + std::to_string(params.size()) +
                             " entries, " + spec.model_id + " has " +
                             std::to_string(spec.n_params()) + " parameters");
    }
    std::vector<std::string> violations;
    for (std::size_t i = 0; i < spec.n_params(); ++i) {
        const auto& d = spec.params[i];
        double v = params[i];
        if (!(v >= d.range_lo && v <= d.range_hi)) {
            std::ostringstream os;
            os << d.name << " = " << v << " outside [" << d.range_lo << ", " << d.range_hi
               << "]";
            violations.push_back(os.str());
        }
    }
    return violations;
}

std::string model_card_text(const ModelSpec& spec) {
    std::ostringstream os;
    os << spec.display_name << " (id: " << spec.model_id << ", tier " << spec.tier << ")\n";
    os << "  states (" << spec.n_states() << "):";
    for (const auto& s : spec.state_labels) os << " " << s;
    os << "\n  parameters (" << spec.n_params() << "):\n";
    for (const auto& p : spec.params) {
        os << "    " << p.name << "  range (" << p.range_lo << ", " << p.range_hi << ")";
        if (p.zero_true) os << "  [zero-true: reported as MAE]";
        os << "\n";
    }
    if (!spec.constants.empty()) {
        os << "  constants:";
        for (const auto& c : spec.constants) os << " " << c.name << "=" << c.value;
        os << "\n";
    }
    os << "  default initial state:";
    for (double v : spec.y0_default) os << " " << v;
    os << "\n  horizon: " << spec.t_horizon << " time units, " << spec.n_samples
       << " grid points\n";
    for (const auto& n : spec.notes) os << "  note: " << n << "\n";
    return os.str();
}

nlohmann::json model_card_json(const ModelSpec& spec) {
    nlohmann::json j;
    j["model_id"] = spec.model_id;
    j["display_name"] = spec.display_name;
    j["tier"] = spec.tier;
    j["states"] = spec.state_labels;
    j["params"] = nlohmann::json::array();
    for (const auto& p : spec.params) {
        j["params"].push_back({{"name", p.name},
                               {"range_lo", p.range_lo},
                               {"range_hi", p.range_hi},
                               {"zero_true", p.zero_true}});
    }
    j["constants"] = nlohmann::json::array();
    for (const auto& c : spec.constants) {
        j["constants"].push_back({{"name", c.name}, {"value", c.value}});
    }
    j["y0_default"] = spec.y0_default;
    j["t_horizon"] = spec.t_horizon;
    j["n_samples"] = spec.n_samples;
    j["notes"] = spec.notes;
    return j;
}

} // namespace epifit
