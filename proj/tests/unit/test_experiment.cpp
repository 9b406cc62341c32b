#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cfho/error.hpp"
#include "cfho/experiment.hpp"

using namespace cfho;
using nlohmann::json;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig c = ExperimentConfig::desk();
    c.network.num_aps = 10;
    c.network.area_side_m = 300.0;
    c.network.wrap_margin_m = 60.0;
    c.mobility.trip_cycles = 4;
    c.engine.schemes = {Scheme::pomdp_ho_min, Scheme::lsf_time, Scheme::lsf_threshold, Scheme::pomdp_plain};
    c.engine.horizon = 2;
    c.engine.belief_budget = 70;
    c.engine.expansion_depth = 1;
    c.seeds.trials = 3;
    c.seeds.master = 77;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("cfho_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("noise power") {
    const double w = noise_power(-174.0, 8.0, 20e6);
    CHECK(w == doctest::Approx(5.02e-13).epsilon(2e-3));
    CHECK(10.0 * std::log10(w) + 30.0 == doctest::Approx(-92.99).epsilon(1e-4));
    CHECK(noise_power(-174.0, 0.0, 1.0) == doctest::Approx(std::pow(10.0, -20.4)).epsilon(1e-12));
    CHECK(10.0 * std::log10(noise_power(-174.0, 8.0, 40e6) / w) == doctest::Approx(3.0103).epsilon(1e-4));
    CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
    CHECK(dbm_to_watt(20.0) == doctest::Approx(0.1));
    CHECK_THROWS_AS(noise_power(-174.0, 8.0, 0.0), ConfigError);
}

TEST_CASE("overhead-adjusted spectral efficiency") {
    CHECK(overhead_adjusted_se(3.2, 4, 0.0) == 3.2);
    CHECK(overhead_adjusted_se(5.0, 2, 0.1) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(overhead_adjusted_se(5.0, 10, 0.1) == 0.0);
    CHECK(overhead_adjusted_se(5.0, 12, 0.1) == 0.0);
    CHECK(overhead_adjusted_se(5.0, 2, 0.1, OverheadRule::geometric) == doctest::Approx(4.05));
    CHECK_THROWS_AS(overhead_adjusted_se(5.0, 1, 1.5), ContractViolation);
    CHECK_THROWS_AS(overhead_adjusted_se(5.0, -1, 0.1), ContractViolation);
}

TEST_CASE("type-7 quantile") {
    CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.1) == doctest::Approx(1.3));
    CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 1.0) == 4.0);
    CHECK(quantile({7.0}, 0.3) == 7.0);
    CHECK_THROWS_AS(quantile({}, 0.5), ContractViolation);
    CHECK_THROWS_AS(quantile({1.0}, 1.5), ContractViolation);
}

TEST_CASE("profiles") {
    const auto t1 = ExperimentConfig::table1();
    CHECK(t1.network.num_aps == 125);
    CHECK(t1.network.area_side_m == 1000.0);
    CHECK_NOTHROW(t1.validate());
    const auto radio = t1.radio_params();
    CHECK(radio.p_dl == doctest::Approx(1.0));
    CHECK(radio.p_ul == doctest::Approx(0.1));
    CHECK(radio.noise_power == doctest::Approx(5.0238e-13).epsilon(1e-3));
    CHECK(radio.M == 8);
    CHECK(radio.tau_c == 200);
    CHECK(radio.tau_p == 16);
    const auto e = t1.engine_config(Scheme::pomdp_ho_min);
    CHECK(e.b_con == 5);
    CHECK(e.horizon == 10);
    CHECK(e.r_threshold == 7.0);
    CHECK(e.gamma == 0.95);
    const auto sys = t1.system_template();
    CHECK(sys.aging.f_doppler == doctest::Approx(60.0));
    CHECK(sys.quantizer.beta_threshold == doctest::Approx(path_loss(150.0, sys.path_loss)));

    const auto desk = ExperimentConfig::desk();
    CHECK(desk.network.num_aps == 60);
    CHECK(desk.network.area_side_m == 700.0);
    CHECK(desk.seeds.trials == 50);
    CHECK(desk.mobility.trip_cycles == 100);
    CHECK(desk.network.num_aps / std::pow(desk.network.area_side_m / 1000.0, 2) == doctest::Approx(122.4).epsilon(1e-3));
    CHECK_THROWS_AS(ExperimentConfig::profile("huge"), ConfigError);
}

TEST_CASE("configuration JSON") {
    auto c = tiny_config();
    c.overhead.rule = OverheadRule::geometric;
    c.engine.convention = MomentConvention::exact;
    const json j = to_json(c);
    CHECK(to_json(config_from_json(j)) == j);

    CHECK_THROWS_AS(config_from_json(json::parse(R"({"network": {"aps": 3}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"plumbing": {}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"network": {"num_aps": "many"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"engine": {"b_con": 0}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"([1, 2])")), ConfigError);

    const auto from_profile = config_from_json(json::parse(R"({"profile": "table1", "seeds": {"trials": 4}})"));
    CHECK(from_profile.network.num_aps == 125);
    CHECK(from_profile.seeds.trials == 4);

    const auto schemes = config_from_json(json::parse(R"({"engine": {"scheme": ["lsf_time", "pomdp_plain"]}})"));
    CHECK(schemes.engine.schemes == std::vector<Scheme>{Scheme::lsf_time, Scheme::pomdp_plain});
}

TEST_CASE("dotted overrides") {
    auto c = ExperimentConfig::desk();
    apply_override(c, "engine.horizon", "5");
    CHECK(c.engine.horizon == 5);
    apply_override(c, "engine.scheme", "lsf_time,lsf_threshold");
    CHECK(c.engine.schemes == std::vector<Scheme>{Scheme::lsf_time, Scheme::lsf_threshold});
    apply_override(c, "overhead.rule", "geometric");
    CHECK(c.overhead.rule == OverheadRule::geometric);
    apply_override(c, "network.fixed_layout", "true");
    CHECK(c.network.fixed_layout);
    apply_override(c, "workers", "3");
    CHECK(c.workers == 3);
    apply_override(c, "out_dir", "results/a");
    CHECK(c.out_dir == "results/a");
    apply_override(c, "seeds.master", "18446744073709551615");
    CHECK(c.seeds.master == 18446744073709551615ULL);
    CHECK_THROWS_AS(apply_override(c, "engine.nope", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "horizon", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "engine.horizon", "ten"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "engine.scheme", "teleport"), ConfigError);
}

TEST_CASE("configuration files") {
    const auto dir = scratch_dir("config");
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ok.json") << R"({"engine": {"horizon": 4}, "workers": 2})";
        std::ofstream(dir / "broken.json") << "{ not json";
    }
    const auto c = load_config(dir / "ok.json");
    CHECK(c.engine.horizon == 4);
    CHECK(c.workers == 2);
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("trial setup is reproducible and shared by every scheme") {
    auto c = tiny_config();
    const auto a = prepare_trial(c, 1);
    const auto b = prepare_trial(c, 1);
    CHECK(a.trip.lsf == b.trip.lsf);
    CHECK(a.sys.layout.ap_positions == b.sys.layout.ap_positions);
    CHECK(a.engine_seed == b.engine_seed);
    const auto other = prepare_trial(c, 2);
    CHECK_FALSE(other.sys.layout.ap_positions == a.sys.layout.ap_positions);
    c.network.fixed_layout = true;
    CHECK(prepare_trial(c, 1).sys.layout.ap_positions == prepare_trial(c, 2).sys.layout.ap_positions);
    CHECK(a.trip.positions.size() == static_cast<std::size_t>(c.mobility.trip_cycles + c.engine.horizon + 1));
    CHECK(a.trip.lsf.size() == static_cast<std::size_t>(c.mobility.trip_cycles + 1));
}

TEST_CASE("experiment records") {
    auto c = tiny_config();
    c.overhead.delta = 0.1;
    const auto m = run_experiment(c);
    const std::size_t per_trial = c.engine.schemes.size() * static_cast<std::size_t>(c.mobility.trip_cycles);
    REQUIRE(m.records.size() == per_trial * static_cast<std::size_t>(c.seeds.trials));
    CHECK(m.trials.size() == c.engine.schemes.size() * static_cast<std::size_t>(c.seeds.trials));
    std::size_t i = 0;
    for (int trial = 0; trial < c.seeds.trials; ++trial) {
        for (Scheme s : c.engine.schemes) {
            int cum = 0;
            for (int t = 1; t <= c.mobility.trip_cycles; ++t, ++i) {
                const auto& r = m.records[i];
                CHECK(r.trial == trial);
                CHECK(r.scheme == s);
                CHECK(r.t == t);
                CHECK(r.cum_ho >= cum);
                cum += r.n_ho;
                CHECK(r.cum_ho == cum);
                CHECK(r.se_adj <= r.se);
                CHECK(r.se_adj == doctest::Approx(std::max(0.0, 1.0 - 0.1 * r.n_ho) * r.se));
            }
        }
    }
    for (const auto& ts : m.trials) {
        int sum = 0;
        for (const auto& r : m.records) {
            if (r.trial == ts.trial && r.scheme == ts.scheme) sum += r.n_ho;
        }
        CHECK(ts.total_ho == sum);
    }

    const auto again = run_trial(c, 1, nullptr);
    const auto setup = prepare_trial(c, 1);
    for (const auto& r : again) {
        CHECK(r.se == doctest::Approx(serving_se(setup.sys, setup.trip, r.t, r.serving_set)).epsilon(1e-14));
    }
}

TEST_CASE("results do not depend on the worker count") {
    auto c = tiny_config();
    c.workers = 1;
    const std::string one = per_cycle_csv(run_experiment(c));
    c.workers = 3;
    const std::string three = per_cycle_csv(run_experiment(c));
    CHECK(one == three);
    CHECK(one.rfind("trial,t,scheme,se_nats,n_ho,cum_ho,se_adj\n", 0) == 0);
}

TEST_CASE("summary statistics") {
    const auto c = tiny_config();
    const auto m = run_experiment(c);
    const json s = summarize(m, c.mobility.trip_cycles);
    CHECK(s["trip_cycles"] == c.mobility.trip_cycles);
    CHECK(s["quantile_grid_step"] == 0.01);
    for (Scheme sc : c.engine.schemes) {
        const json& e = s["schemes"][to_string(sc)];
        std::vector<double> se;
        double total_ho = 0.0;
        for (const auto& r : m.records) {
            if (r.scheme == sc) se.push_back(r.se);
        }
        for (const auto& t : m.trials) {
            if (t.scheme == sc) total_ho += t.total_ho;
        }
        CHECK(e["samples"] == se.size());
        CHECK(e["trials"] == c.seeds.trials);
        const auto& q = e["se_quantiles_nats"];
        REQUIRE(q.size() == 101);
        for (std::size_t k = 1; k < q.size(); ++k) CHECK(q[k].get<double>() >= q[k - 1].get<double>());
        for (int k : {0, 10, 37, 100}) {
            CHECK(q[static_cast<std::size_t>(k)].get<double>() == doctest::Approx(quantile(se, k / 100.0)).epsilon(1e-8));
        }
        CHECK(e["se_p10_nats"].get<double>() == doctest::Approx(quantile(se, 0.1)).epsilon(1e-8));
        CHECK(e["mean_total_ho"].get<double>() == doctest::Approx(total_ho / c.seeds.trials).epsilon(1e-8));
        CHECK(e["mean_cum_ho_curve"].size() == static_cast<std::size_t>(c.mobility.trip_cycles));
        CHECK(e["mean_cum_ho_curve"].back().get<double>() == doctest::Approx(total_ho / c.seeds.trials));
    }
    CHECK(s["cum_ho_ratios"].is_object());
}

TEST_CASE("empty trips") {
    auto c = tiny_config();
    c.mobility.trip_cycles = 0;
    const auto m = run_experiment(c);
    CHECK(m.records.empty());
    CHECK(per_cycle_csv(m) == "trial,t,scheme,se_nats,n_ho,cum_ho,se_adj\n");
    const json s = summarize(m, 0);
    CHECK(s["schemes"][to_string(Scheme::lsf_time)]["samples"] == 0);
    CHECK(s["schemes"][to_string(Scheme::lsf_time)]["se_p10_nats"].is_null());
    CHECK(s["schemes"][to_string(Scheme::lsf_time)]["se_quantiles_nats"].empty());
}

TEST_CASE("infeasible network size") {
    auto c = tiny_config();
    c.network.num_aps = 5;
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("export writes stable files") {
    auto c = tiny_config();
    c.seeds.trials = 2;
    c.engine.schemes = {Scheme::lsf_time, Scheme::lsf_threshold};
    const auto m = run_experiment(c);
    const auto a = scratch_dir("export_a");
    const auto b = scratch_dir("export_b");
    export_metrics(m, c, a);
    export_metrics(m, c, b);
    for (const char* f : {"per_cycle.csv", "summary.json", "manifest.json"}) {
        REQUIRE(std::filesystem::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "per_cycle.csv") == per_cycle_csv(m));
    const json manifest = json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["master_seed"] == c.seeds.master);
    CHECK(manifest["config"] == to_json(c));
    CHECK_NOTHROW(json::parse(slurp(a / "summary.json")));

    const auto blocker = scratch_dir("export_file");
    std::ofstream(blocker) << "x";
    CHECK_THROWS_AS(export_metrics(m, c, blocker), IoError);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
    std::filesystem::remove_all(blocker);
}
