#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "doctest.h"

#include "cfho/error.hpp"
#include "cfho/pomdp.hpp"
#include "oracles.hpp"

using namespace cfho;

namespace {

ModelParams table_params(int horizon) {
    ModelParams p;
    p.b_con = 5;
    p.horizon = horizon;
    p.quantizer = StateQuantizer::from_distances(p.path_loss, 150.0, 50.0, 200.0);
    return p;
}

std::shared_ptr<const RewardTable> table_rewards(std::size_t pool, int b_con) {
    RadioParams radio;
    return build_reward_table(pool, b_con, std::vector<int>(pool, 1), AgingProfile::make(60.0, 66.7e-6, 200), radio,
                              StateQuantizer::from_distances(PathLossParams{}, 150.0, 50.0, 200.0));
}

// Pool of six APs moving along a line; distances at stages 0..H.
std::vector<std::vector<double>> line_distances(int horizon) {
    std::vector<std::vector<double>> d;
    for (int k = 0; k <= horizon; ++k) {
        d.push_back({60.0 + 10.0 * k, 120.0 - 5.0 * k, 150.0, 200.0 + 3.0 * k, 90.0, 300.0 - 10.0 * k});
    }
    return d;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("structural counts of a six-AP pool") {
    const auto params = table_params(3);
    const std::vector<std::size_t> pool{3, 7, 9, 12, 20, 31};
    const auto model = build_model(pool, {}, line_distances(3), params, table_rewards(6, 5));
    CHECK(model.num_states() == 64);
    CHECK(model.num_actions() == 6);
    CHECK(model.num_observations() == 64);
    CHECK(model.rewards->size() == 384);
    CHECK(model.stages.size() == 4);
    const auto actions = enumerate_actions(6, 5);
    for (std::size_t a = 1; a < actions.size(); ++a) CHECK(actions[a - 1] < actions[a]);
    for (auto m : actions) CHECK(std::popcount(m) == 5);
    CHECK(enumerate_actions(4, 2).size() == 6);
}

TEST_CASE("initial belief follows the observed states") {
    const auto params = table_params(2);
    const std::vector<std::size_t> pool{0, 1, 2, 3, 4, 5};
    std::map<std::size_t, ChannelState> all_good;
    for (std::size_t b : pool) all_good[b] = ChannelState::good;
    const auto m1 = build_model(pool, all_good, line_distances(2), params, table_rewards(6, 5));
    const auto joint = expand_belief(m1.initial_belief);
    CHECK(joint[63] == 1.0);
    CHECK(sum(joint) == doctest::Approx(1.0).epsilon(1e-15));

    const auto m2 = build_model(pool, {}, line_distances(2), params, table_rewards(6, 5));
    for (std::size_t j = 0; j < pool.size(); ++j) {
        CHECK(m2.initial_belief.upsilon[j] ==
              prob_good(line_distances(2)[0][j], params.quantizer, params.shadowing, params.path_loss));
    }
    const auto m3 = build_model(pool, {{2, ChannelState::bad}}, line_distances(2), params, table_rewards(6, 5));
    CHECK(m3.initial_belief.upsilon[2] == 0.0);

    CHECK_THROWS_AS(build_model({0, 1, 2}, {}, line_distances(2), params, table_rewards(6, 5)), ContractViolation);
    CHECK_THROWS_AS(build_model(pool, {}, line_distances(1), params, table_rewards(6, 5)), ConfigError);
}

TEST_CASE("expanded transitions are row-stochastic") {
    const auto params = table_params(4);
    const auto model = build_model({0, 1, 2, 3, 4, 5}, {}, line_distances(4), params, table_rewards(6, 5));
    for (int k = 1; k <= model.horizon; ++k) {
        for (std::size_t s = 0; s < model.num_states(); ++s) {
            double row = 0.0;
            for (std::size_t t = 0; t < model.num_states(); ++t) row += model.transition(k, s, t);
            CHECK(std::abs(row - 1.0) < 1e-9);
        }
        for (std::size_t a = 0; a < model.num_actions(); ++a) {
            for (std::size_t s = 0; s < model.num_states(); s += 7) {
                double row = 0.0;
                for (std::size_t o = 0; o < model.num_observations(); ++o) row += model.observation_prob(k, a, s, o);
                CHECK(std::abs(row - 1.0) < 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(model.transition(0, 0, 0), ContractViolation);
}

TEST_CASE("unconnected observations follow the stage marginal") {
    Rng rng = make_rng(77);
    const auto m = oracle::random_model(3, 1, 2, 0.9, rng);
    const std::size_t a = 0;
    const std::uint32_t mask = m.actions[a];
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        for (std::size_t o = 0; o < m.num_observations(); ++o) {
            double expected = ((s ^ o) & mask) ? 0.0 : 1.0;
            for (std::size_t j = 0; j < 3; ++j) {
                if ((mask >> j) & 1U) continue;
                const double g = m.stages[1].prob_good[j];
                expected *= ((o >> j) & 1U) ? g : 1.0 - g;
            }
            CHECK(m.observation_prob(1, a, s, o) == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("belief expansion") {
    Belief ones{{1.0, 1.0, 1.0}};
    const auto e1 = expand_belief(ones);
    CHECK(e1[7] == 1.0);
    Belief half{std::vector<double>(6, 0.5)};
    for (double p : expand_belief(half)) CHECK(p == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
    Rng rng = make_rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Belief b;
        for (int j = 0; j < 6; ++j) b.upsilon.push_back(u(rng));
        const auto e = expand_belief(b);
        CHECK(std::abs(sum(e) - 1.0) < 1e-12);
        const auto ref = oracle::joint_of(b.upsilon);
        for (std::size_t s = 0; s < e.size(); ++s) CHECK(std::abs(e[s] - ref[s]) < 1e-15);
    }
}

TEST_CASE("factorized update equals exact Bayes filtering") {
    Rng rng = make_rng(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = oracle::random_model(4, 2, 3, 0.95, rng);
        Belief b;
        for (int j = 0; j < 4; ++j) b.upsilon.push_back(u(rng));
        const std::size_t a = static_cast<std::size_t>(rng() % m.num_actions());
        const std::uint32_t mask = m.actions[a];
        const std::uint32_t bits = static_cast<std::uint32_t>(rng()) & mask;
        const int stage = 1 + static_cast<int>(rng() % 3);
        const auto got = expand_belief(belief_update(b, a, {mask, bits}, m, stage));
        const auto ref = oracle::bayes_step(oracle::joint_of(b.upsilon), mask, bits, m.stages[static_cast<std::size_t>(stage)]);
        REQUIRE(ref.size() == got.size());
        for (std::size_t s = 0; s < got.size(); ++s) CHECK(std::abs(got[s] - ref[s]) < 1e-12);
    }
}

TEST_CASE("belief update special cases") {
    Rng rng = make_rng(3);
    auto m = oracle::random_model(2, 1, 2, 0.9, rng);
    auto stages = m.stages;
    stages[1].trans = {{0.8, 0.3}, {0.4, 0.4}};
    m = assemble_model(m.pool, 1, 2, 0.9, stages, m.rewards, m.initial_belief);
    const std::size_t a = 0;  // connects pool position 0
    REQUIRE(m.actions[a] == 0b01);
    Belief b{{0.2, 1.0}};
    auto good = belief_update(b, a, {0b01, 0b01}, m, 1);
    CHECK(good.upsilon[0] == 0.8);
    CHECK(good.upsilon[1] == doctest::Approx(0.4));
    auto bad = belief_update(b, a, {0b01, 0b00}, m, 1);
    CHECK(bad.upsilon[0] == 0.3);
    Belief certain{{0.2, 1.0}};
    stages[1].trans = {{0.8, 0.3}, {0.7, 0.1}};
    m = assemble_model(m.pool, 1, 2, 0.9, stages, m.rewards, m.initial_belief);
    CHECK(belief_update(certain, a, {0b01, 0b00}, m, 1).upsilon[1] == doctest::Approx(0.7));
    CHECK_THROWS_AS(belief_update(b, a, {0b11, 0b10}, m, 1), ContractViolation);
    CHECK_THROWS_AS(belief_update(b, a, {0b01, 0b10}, m, 1), ContractViolation);
    CHECK_THROWS_AS(belief_update(b, a, {0b01, 0b00}, m, 0), ContractViolation);
    const auto pred = predict(b, m.stages[1]);
    CHECK(pred.upsilon[0] == doctest::Approx(0.2 * 0.8 + 0.8 * 0.3));
}

TEST_CASE("one-stage policy is greedy") {
    Rng rng = make_rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto m = oracle::random_model(3, 2, 1, 0.95, rng);
        const auto res = solve_pbvi(m);
        const auto joint = oracle::propagate(oracle::joint_of(m.initial_belief.upsilon), m.stages[1]);
        double best = -1.0;
        std::size_t best_a = 0;
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            double v = 0.0;
            for (std::size_t s = 0; s < joint.size(); ++s) v += joint[s] * m.reward(s, a);
            if (v > best) {
                best = v;
                best_a = a;
            }
        }
        CHECK(res.value == doctest::Approx(best).epsilon(1e-12));
        CHECK(exact_expectimax(m) == doctest::Approx(best).epsilon(1e-12));
        CHECK(act(res.policy, predict(m.initial_belief, m.stages[1]), 1) == best_a);
    }
}

TEST_CASE("zero discount gives the greedy action at every stage") {
    Rng rng = make_rng(9);
    const auto m = oracle::random_model(3, 1, 3, 0.0, rng);
    const auto res = solve_pbvi(m);
    Belief b{{0.3, 0.6, 0.9}};
    for (int k = 1; k <= 3; ++k) {
        const auto joint = expand_belief(b);
        std::size_t best_a = 0;
        double best = -1.0;
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            double v = 0.0;
            for (std::size_t s = 0; s < joint.size(); ++s) v += joint[s] * m.reward(s, a);
            if (v > best + 1e-12) {
                best = v;
                best_a = a;
            }
        }
        CHECK(act(res.policy, b, k) == best_a);
    }
}

TEST_CASE("point-based values against exhaustive search") {
    Rng rng = make_rng(31);
    for (int horizon = 1; horizon <= 3; ++horizon) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto m = oracle::random_model(2, 1, horizon, 0.95, rng);
            PbviOptions full;
            full.belief_budget = 100000;
            full.expansion_depth = horizon;
            full.exhaustive_observations = true;
            const double ref = oracle::optimal_value(m);
            CHECK(std::abs(exact_expectimax(m) - ref) < 1e-9);
            CHECK(std::abs(solve_pbvi(m, full).value - ref) < 1e-9);
            PbviOptions sparse;
            sparse.belief_budget = 3;
            sparse.expansion_depth = 1;
            sparse.seed = static_cast<std::uint64_t>(rep);
            const auto res = solve_pbvi(m, sparse);
            CHECK(res.value <= ref + 1e-9);
            CHECK_FALSE(res.warnings.empty());
        }
    }
    Rng big = make_rng(1);
    const auto m4 = oracle::random_model(4, 2, 2, 0.9, big);
    CHECK_THROWS_AS(exact_expectimax(m4), ContractViolation);
}

TEST_CASE("exhaustive value grows with the horizon for nonnegative rewards") {
    Rng rng = make_rng(12);
    const auto base = oracle::random_model(3, 1, 4, 0.95, rng);
    double prev = 0.0;
    for (int h = 1; h <= 4; ++h) {
        std::vector<StageStats> stages(base.stages.begin(), base.stages.begin() + h + 1);
        const auto m = assemble_model(base.pool, 1, h, 0.95, stages, base.rewards, base.initial_belief);
        const double v = exact_expectimax(m);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("acting on alpha vectors") {
    StagePolicy p;
    p.stages.push_back({{{1.0, 2.0, 3.0, 4.0}, 3}, {{1.0, 2.0, 3.0, 4.0}, 1}, {{0.0, 0.0, 0.0, 5.0}, 2}});
    Belief b{{0.5, 0.5}};
    CHECK(act(p, b, 1) == 1);
    CHECK(policy_value(p, b, 1) == doctest::Approx(2.5));
    Belief corner{{1.0, 1.0}};
    CHECK(act(p, corner, 1) == 2);
    for (auto& a : p.stages[0]) {
        for (double& v : a.values) v += 17.0;
    }
    CHECK(act(p, b, 1) == 1);
    CHECK(act(p, corner, 1) == 2);
    CHECK_THROWS_AS(act(p, b, 2), ContractViolation);

    Rng rng = make_rng(4);
    const auto m = oracle::random_model(3, 2, 1, 0.9, rng);
    const auto res = solve_pbvi(m);
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        Belief unit;
        for (std::size_t j = 0; j < 3; ++j) unit.upsilon.push_back((s >> j) & 1U ? 1.0 : 0.0);
        std::size_t best_a = 0;
        for (std::size_t a = 1; a < m.num_actions(); ++a) {
            if (m.reward(s, a) > m.reward(s, best_a)) best_a = a;
        }
        CHECK(act(res.policy, unit, 1) == best_a);
    }
}

TEST_CASE("corner values dominate fixed-action rollouts") {
    Rng rng = make_rng(404);
    const auto m = oracle::random_model(3, 1, 3, 0.95, rng);
    const auto res = solve_pbvi(m);
    Rng sim = make_rng(405);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t start : {std::size_t{0}, std::size_t{5}, std::size_t{7}}) {
        Belief corner;
        for (std::size_t j = 0; j < 3; ++j) corner.upsilon.push_back((start >> j) & 1U ? 1.0 : 0.0);
        const double v = policy_value(res.policy, corner, 1);
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            const int n = 10000;
            double total = 0.0;
            double total_sq = 0.0;
            for (int r = 0; r < n; ++r) {
                std::size_t s = start;
                double ret = 0.0;
                double disc = 1.0;
                for (int k = 1; k <= m.horizon; ++k) {
                    ret += disc * m.reward(s, a);
                    disc *= m.discount;
                    if (k == m.horizon) break;
                    std::size_t next = 0;
                    for (std::size_t j = 0; j < 3; ++j) {
                        const auto& tp = m.stages[static_cast<std::size_t>(k) + 1].trans[j];
                        const double g = ((s >> j) & 1U) ? tp.p11 : tp.p01;
                        if (u(sim) < g) next |= std::size_t{1} << j;
                    }
                    s = next;
                }
                total += ret;
                total_sq += ret * ret;
            }
            const double mean = total / n;
            const double se = std::sqrt(std::max(0.0, total_sq / n - mean * mean) / n);
            CHECK(v >= mean - 3.0 * se);
        }
    }
}

TEST_CASE("model dump format") {
    Rng rng = make_rng(21);
    const auto m = oracle::random_model(2, 1, 2, 0.9, rng);
    std::ostringstream os;
    write_model(os, m);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# cfho-pomdp 1");
    std::getline(in, line);
    CHECK(line == "pool: 0 1");
    int r_lines = 0;
    int t_lines = 0;
    int o_lines = 0;
    int stage_lines = 0;
    std::string last;
    while (std::getline(in, line)) {
        if (line.rfind("R ", 0) == 0) ++r_lines;
        if (line.rfind("T ", 0) == 0) ++t_lines;
        if (line.rfind("O ", 0) == 0) ++o_lines;
        if (line.rfind("stage ", 0) == 0) ++stage_lines;
        last = line;
    }
    CHECK(r_lines == 8);
    CHECK(stage_lines == 2);
    CHECK(t_lines <= 2 * 16);
    CHECK(o_lines <= 2 * 2 * 16);
    CHECK(last == "end");
    CHECK(os.str().find("states: 4\nactions: 2\nobservations: 4\n") != std::string::npos);
}
