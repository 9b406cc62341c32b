#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "cfho/error.hpp"
#include "cfho/pomdp.hpp"
#include "cfho/rate.hpp"

using namespace cfho;

namespace {

RadioParams table_radio() {
    RadioParams r;
    r.p_dl = 1.0;
    r.p_ul = 0.1;
    r.noise_power = std::pow(10.0, (-174.0 + 8.0 + 10.0 * std::log10(20e6) - 30.0) / 10.0);
    return r;
}

AgingProfile table_aging() { return AgingProfile::make(60.0, 66.7e-6, 200); }

StateQuantizer table_quantizer() { return StateQuantizer::from_distances(PathLossParams{}, 150.0, 50.0, 200.0); }

ServingConfig serving_of(const std::vector<double>& gains) {
    ServingConfig s;
    for (std::size_t b = 0; b < gains.size(); ++b) {
        s.serving_set.push_back(b);
        s.lsf[b] = gains[b];
    }
    return s;
}

Interferer plain_interferer(std::vector<std::size_t> aps, double to_typical, double own) {
    Interferer it;
    it.serving_set = aps;
    for (std::size_t b : aps) {
        it.lsf_to_typical[b] = to_typical;
        it.lsf_own[b] = own;
    }
    return it;
}

}  // namespace

TEST_CASE("estimated-channel variance") {
    auto radio = table_radio();
    const double beta = 1e-6;
    CHECK(psi(beta, 1.0, radio) == doctest::Approx(beta).epsilon(1e-5));
    CHECK(psi(beta, 0.0, radio) == 0.0);
    const double with_copilot = psi(beta, 1.0, radio, {beta});
    CHECK(with_copilot == doctest::Approx(radio.p_ul * beta * beta / (2.0 * radio.p_ul * beta + radio.noise_power)));
    const double s = 3e-9;
    CHECK(psi_single_user(s, 0.9, radio) == doctest::Approx(0.81 * radio.p_ul * s * s / radio.noise_power));
    CHECK_THROWS_AS(psi(0.0, 1.0, radio), ContractViolation);
}

TEST_CASE("beamforming power coefficient") {
    CHECK(eta(2e-9, 8, 2, 1.0) == doctest::Approx(0.5 * eta(2e-9, 8, 1, 1.0)));
    CHECK(eta(0.25, 2, 2, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(eta(0.0, 8, 1, 1.0), ContractViolation);
    CHECK_THROWS_AS(eta(1.0, 8, 0, 1.0), ContractViolation);
}

TEST_CASE("single static AP reduces to a per-sample SNR") {
    const auto radio = table_radio();
    const auto still = AgingProfile::static_user(radio.tau_c);
    const double beta = 4e-9;
    const double ps = radio.p_ul * beta * beta / (radio.p_ul * beta + radio.noise_power);
    const double M = radio.M;
    const double frac = static_cast<double>(radio.tau_c - radio.n_est() + 1) / radio.tau_c;
    for (int load : {1, 3}) {
        auto s = serving_of({beta});
        s.loads[0] = load;
        const double exact = frac * std::log(1.0 + (M * radio.p_dl * ps / load) /
                                                       (radio.p_dl * beta / load + radio.noise_power));
        const double scaled = frac * std::log(1.0 + (M * radio.p_dl * ps / load) /
                                                       (M * radio.p_dl * beta / load + radio.noise_power));
        CHECK(rate_lb(s, {}, still, radio, MomentConvention::exact) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(rate_lb(s, {}, still, radio, MomentConvention::scaled) == doctest::Approx(scaled).epsilon(1e-12));
    }
    CHECK(rate_lb(ServingConfig{}, {}, still, radio) == 0.0);
}

TEST_CASE("interference power terms") {
    const auto radio = table_radio();
    const auto aging = table_aging();
    auto s = serving_of({5e-9, 2e-9});
    InterfererPopulation pop{plain_interferer({0, 1}, 1e-9, 3e-9)};
    pop[0].loads[1] = 2;
    const auto xi = xi_terms(s, pop, aging, radio, 5, MomentConvention::scaled);
    REQUIRE(xi.xi4.size() == 1);
    CHECK(xi.xi4[0] == doctest::Approx(radio.M * radio.p_dl * (1e-9 + 1e-9 / 2.0)).epsilon(1e-12));
    const auto xe = xi_terms(s, pop, aging, radio, 5, MomentConvention::exact);
    CHECK(xe.xi4[0] == doctest::Approx(radio.p_dl * 1.5e-9).epsilon(1e-12));

    pop[0].copilot = true;
    const auto xc = xi_terms(s, pop, aging, radio, 5, MomentConvention::scaled);
    CHECK(xc.xi4[0] > xi.xi4[0]);
    CHECK(xc.xi1 < xi.xi1);
}

TEST_CASE("rate monotonicity") {
    const auto radio = table_radio();
    const auto aging = table_aging();
    std::vector<double> gains{3e-9, 8e-9, 1e-8};
    const InterfererPopulation pop{plain_interferer({3}, 2e-9, 5e-9)};
    const double base = rate_lb(serving_of(gains), pop, aging, radio);
    CHECK(base >= 0.0);
    for (double scale : {1.5, 4.0}) {
        auto up = gains;
        for (double& g : up) g *= scale;
        CHECK(rate_lb(serving_of(up), pop, aging, radio) > base);
    }
    const InterfererPopulation louder{plain_interferer({3}, 4e-9, 5e-9)};
    CHECK(rate_lb(serving_of(gains), louder, aging, radio) < base);
    const auto still = AgingProfile::static_user(radio.tau_c);
    CHECK(rate_lb(serving_of(gains), pop, still, radio) > base);
}

TEST_CASE("single-user spectral efficiency") {
    const auto radio = table_radio();
    const auto aging = table_aging();
    const std::vector<double> g{7e-9, 2e-9};
    const double rho_e = aging.rho[static_cast<std::size_t>(radio.estimation_lag())];
    double s1 = 0.0;
    double s23 = 0.0;
    for (double v : g) {
        s1 += std::sqrt(rho_e * rho_e * radio.p_ul * v * v / radio.noise_power);
        s23 += radio.p_dl * v;
    }
    double expected = 0.0;
    for (int k = 0; k < radio.data_samples(); ++k) {
        const double r = aging.rho[static_cast<std::size_t>(k)];
        expected += std::log(1.0 + radio.M * radio.p_dl * r * r * s1 * s1 / (radio.M * s23 + radio.noise_power));
    }
    expected /= radio.tau_c;
    CHECK(single_user_se(g, {1, 1}, aging, radio) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(single_user_se({}, {}, aging, radio) == 0.0);
    CHECK_THROWS_AS(single_user_se(g, {1}, aging, radio), ContractViolation);
}

TEST_CASE("reward") {
    const auto radio = table_radio();
    const auto aging = table_aging();
    const auto q = table_quantizer();
    const std::vector<int> loads(6, 1);
    const std::uint32_t action = 0b011111;
    const double all_good = reward(0b111111, action, 6, 5, loads, aging, radio, q);
    const double all_bad = reward(0, action, 6, 5, loads, aging, radio, q);
    CHECK(all_good > all_bad);
    CHECK(reward(0b000010, action, 6, 5, loads, aging, radio, q) ==
          doctest::Approx(reward(0b000100, action, 6, 5, loads, aging, radio, q)).epsilon(1e-14));
    CHECK(reward(0b101010, 0b111110, 6, 5, loads, aging, radio, q) ==
          doctest::Approx(reward(0b010101, 0b111101, 6, 5, loads, aging, radio, q)).epsilon(1e-14));
    CHECK_THROWS_AS(reward(0, 0b000111, 6, 5, loads, aging, radio, q), ContractViolation);
    CHECK_THROWS_AS(reward(0, 0b1011111, 6, 5, loads, aging, radio, q), ContractViolation);

    const auto table = build_reward_table(6, 5, loads, aging, radio, q);
    CHECK(table->size() == 384);
    const auto actions = enumerate_actions(6, 5);
    for (std::size_t s = 0; s < 64; ++s) {
        for (std::size_t a = 0; a < actions.size(); ++a) {
            CHECK((*table)[s * actions.size() + a] ==
                  reward(static_cast<std::uint32_t>(s), actions[a], 6, 5, loads, aging, radio, q));
        }
    }
}

TEST_CASE("signal-level simulation agrees with the closed form") {
    auto radio = table_radio();
    radio.M = 4;
    const auto aging = table_aging();
    auto s = serving_of({6e-9, 2e-9});
    s.loads[1] = 2;
    Interferer co = plain_interferer({1, 2}, 1.5e-9, 4e-9);
    co.copilot = true;
    co.lsf_own[0] = 1e-9;
    co.lsf_to_typical[1] = 2e-9;
    InterfererPopulation pop{co, plain_interferer({0}, 6e-9, 2e-9)};
    const int lag = 40;
    const auto xi = xi_terms(s, pop, aging, radio, lag, MomentConvention::exact);
    const auto mc = mc_signal_oracle(s, pop, aging, radio, lag, 40000, 7);
    auto close = [](double closed, const PowerEstimate& est) {
        return std::abs(closed - est.mean) <= std::max(0.03 * std::abs(closed), 4.0 * est.std_error);
    };
    CHECK(close(xi.xi1, mc.ds));
    CHECK(close(xi.xi23, mc.bu_ca));
    REQUIRE(mc.mi.size() == 2);
    CHECK(close(xi.xi4[0], mc.mi[0]));
    CHECK(close(xi.xi4[1], mc.mi[1]));
    CHECK(mc.max_tx_power_ratio <= 1.01);

    const auto alone = mc_signal_oracle(s, {}, aging, radio, lag, 10000, 8);
    CHECK(alone.mi.empty());
    CHECK_THROWS_AS(mc_signal_oracle(s, {}, aging, radio, lag, 0, 8), ContractViolation);
}
