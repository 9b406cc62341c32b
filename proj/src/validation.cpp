#include "cfho/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cfho/channel.hpp"
#include "cfho/pomdp.hpp"
#include "cfho/random.hpp"
#include "cfho/rate.hpp"

namespace cfho {

namespace {

std::string format_line(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

bool close_enough(double closed, double mc, double se, double rel, double n_se) {
    return std::abs(closed - mc) <= std::max(rel * std::abs(closed), n_se * se);
}

struct RateScenario {
    ServingConfig serving;
    InterfererPopulation pop;
    int lag = 0;
};

RateScenario draw_scenario(Rng& rng, const PathLossParams& pl, int data_samples) {
    std::uniform_int_distribution<int> n_serve(1, 5);
    std::uniform_int_distribution<int> n_int(0, 3);
    std::uniform_int_distribution<int> n_int_serve(1, 3);
    std::uniform_int_distribution<int> load(1, 3);
    std::uniform_real_distribution<double> dist(20.0, 300.0);
    std::uniform_int_distribution<int> lag(0, data_samples - 1);
    constexpr std::size_t kAps = 8;

    RateScenario sc;
    std::vector<double> typ_gain(kAps);
    std::vector<int> ap_load(kAps);
    for (std::size_t b = 0; b < kAps; ++b) {
        typ_gain[b] = path_loss(dist(rng), pl);
        ap_load[b] = load(rng);
    }
    std::vector<std::size_t> order(kAps);
    for (std::size_t b = 0; b < kAps; ++b) order[b] = b;

    std::shuffle(order.begin(), order.end(), rng);
    const auto ns = static_cast<std::size_t>(n_serve(rng));
    sc.serving.serving_set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ns));
    std::sort(sc.serving.serving_set.begin(), sc.serving.serving_set.end());
    for (std::size_t b : sc.serving.serving_set) {
        sc.serving.lsf[b] = typ_gain[b];
        sc.serving.loads[b] = ap_load[b];
    }

    const int ni = n_int(rng);
    for (int i = 0; i < ni; ++i) {
        Interferer it;
        it.copilot = (i == 0);
        std::shuffle(order.begin(), order.end(), rng);
        const auto k = static_cast<std::size_t>(n_int_serve(rng));
        it.serving_set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(it.serving_set.begin(), it.serving_set.end());
        for (std::size_t b : it.serving_set) {
            it.lsf_to_typical[b] = typ_gain[b];
            it.loads[b] = ap_load[b];
        }
        for (std::size_t b = 0; b < kAps; ++b) it.lsf_own[b] = path_loss(dist(rng), pl);
        sc.pop.push_back(std::move(it));
    }
    sc.lag = lag(rng);
    return sc;
}

}  // namespace

bool ValidationReport::passed() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

std::string ValidationReport::text() const {
    std::string out;
    for (const auto& s : suites) {
        out += (s.passed ? "PASS " : "FAIL ") + s.name + "\n";
        for (const auto& l : s.lines) out += "  " + l + "\n";
    }
    return out;
}

SuiteResult validate_rate_vs_mc(const ValidationOptions& opt) {
    SuiteResult res;
    res.name = "rate-vs-mc";
    const PathLossParams pl{1.1, 3.8, 13.5};
    RadioParams radio;
    const AgingProfile aging = AgingProfile::make(60.0, 66.7e-6, radio.tau_c);
    Rng rng = make_rng(derive_seed(opt.seed, 1));
    for (int c = 0; c < opt.rate_configs; ++c) {
        const RateScenario sc = draw_scenario(rng, pl, radio.data_samples());
        const XiTerms xi = xi_terms(sc.serving, sc.pop, aging, radio, sc.lag, MomentConvention::exact);
        const SignalPowers mc = mc_signal_oracle(sc.serving, sc.pop, aging, radio, sc.lag, opt.rate_realizations,
                                                 derive_seed(opt.seed, 100 + static_cast<std::uint64_t>(c)));
        bool ok = close_enough(xi.xi1, mc.ds.mean, mc.ds.std_error, 0.03, 3.0) &&
                  close_enough(xi.xi23, mc.bu_ca.mean, mc.bu_ca.std_error, 0.03, 3.0);
        for (std::size_t j = 0; j < sc.pop.size(); ++j) {
            ok = ok && close_enough(xi.xi4[j], mc.mi[j].mean, mc.mi[j].std_error, 0.03, 3.0);
        }
        res.passed = res.passed && ok;
        res.lines.push_back(format_line(
            "config %d (%zu serving, %zu interferers, lag %d): xi1 %.4g/%.4g xi23 %.4g/%.4g xi4 %.4g/%.4g %s", c,
            sc.serving.serving_set.size(), sc.pop.size(), sc.lag, xi.xi1, mc.ds.mean, xi.xi23, mc.bu_ca.mean,
            xi.xi4_total(),
            [&] {
                double t = 0.0;
                for (const auto& m : mc.mi) t += m.mean;
                return t;
            }(),
            ok ? "ok" : "MISMATCH"));
    }
    return res;
}

SuiteResult validate_transitions_vs_mc(const ValidationOptions& opt) {
    SuiteResult res;
    res.name = "transition-vs-mc";
    const PathLossParams pl{1.1, 3.8, 13.5};
    const StateQuantizer q = StateQuantizer::from_distances(pl, 150.0, 50.0, 200.0);
    const double speed = 10.0;
    const double dt = 1.0;
    const std::vector<std::pair<double, double>> pairs{{100, 110}, {140, 150}, {155, 145}, {170, 180}, {130, 120}};
    std::uint64_t stream = 0;
    for (double iota : {0.0, 0.5, 1.0}) {
        const ShadowingParams sh{6.0, 100.0, iota};
        const double c = step_correlation(sh, speed, dt);
        for (const auto& [d_prev, d_curr] : pairs) {
            Rng rng = make_rng(derive_seed(opt.seed, 1000 + stream++));
            std::normal_distribution<double> normal(0.0, 1.0);
            const double pl_prev = path_loss(d_prev, pl);
            const double pl_curr = path_loss(d_curr, pl);
            long good_curr = 0, good_prev = 0, good_both = 0, bad_prev_good_curr = 0;
            for (int i = 0; i < opt.shadowing_pairs; ++i) {
                const double k1 = normal(rng);
                const double k2 = normal(rng);
                const double k2_next = c * k2 + std::sqrt(1.0 - c * c) * normal(rng);
                const double z_prev = std::sqrt(iota) * k1 + std::sqrt(1.0 - iota) * k2;
                const double z_curr = std::sqrt(iota) * k1 + std::sqrt(1.0 - iota) * k2_next;
                const bool gp = pl_prev * std::pow(10.0, sh.sigma_sh_db * z_prev / 10.0) > q.beta_threshold;
                const bool gc = pl_curr * std::pow(10.0, sh.sigma_sh_db * z_curr / 10.0) > q.beta_threshold;
                good_curr += gc;
                good_prev += gp;
                good_both += gp && gc;
                bad_prev_good_curr += !gp && gc;
            }
            const double n = opt.shadowing_pairs;
            const double emp_marg = good_curr / n;
            const double emp_p11 = good_prev ? static_cast<double>(good_both) / good_prev : 0.0;
            const double emp_p01 =
                good_prev < opt.shadowing_pairs ? static_cast<double>(bad_prev_good_curr) / (n - good_prev) : 0.0;
            const double marg = prob_good(d_curr, q, sh, pl);
            const TransitionPair tp = trans_probs(d_prev, d_curr, q, sh, pl, speed, dt);
            const bool ok = std::abs(marg - emp_marg) <= 5e-3 && std::abs(tp.p11 - emp_p11) <= 5e-3 &&
                            std::abs(tp.p01 - emp_p01) <= 5e-3;
            res.passed = res.passed && ok;
            res.lines.push_back(format_line(
                "iota %.1f d %.0f->%.0f: p1 %.5f/%.5f p11 %.5f/%.5f p01 %.5f/%.5f %s", iota, d_prev, d_curr, marg,
                emp_marg, tp.p11, emp_p11, tp.p01, emp_p01, ok ? "ok" : "MISMATCH"));
        }
    }
    return res;
}

SuiteResult validate_pbvi_vs_expectimax(const ValidationOptions& opt) {
    SuiteResult res;
    res.name = "pbvi-vs-expectimax";
    Rng rng = make_rng(derive_seed(opt.seed, 2));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Shape {
        std::size_t pool;
        int b_con;
    };
    int instance = 0;
    for (Shape shape : {Shape{2, 1}, Shape{3, 1}, Shape{3, 2}}) {
        for (int horizon = 1; horizon <= 3; ++horizon) {
            for (int rep = 0; rep < 4; ++rep, ++instance) {
                const std::size_t n = shape.pool;
                std::vector<StageStats> stages(static_cast<std::size_t>(horizon) + 1);
                for (auto& st : stages) {
                    st.trans.resize(n);
                    st.prob_good.resize(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        st.trans[j] = {u(rng), u(rng)};
                        st.prob_good[j] = u(rng);
                    }
                }
                const auto actions = enumerate_actions(n, shape.b_con);
                auto table = std::make_shared<RewardTable>((std::size_t{1} << n) * actions.size());
                for (double& r : *table) r = 10.0 * u(rng);
                Belief b0;
                for (std::size_t j = 0; j < n; ++j) b0.upsilon.push_back(u(rng));
                std::vector<std::size_t> pool(n);
                for (std::size_t j = 0; j < n; ++j) pool[j] = j;
                const PomdpModel model =
                    assemble_model(pool, shape.b_con, horizon, 0.95, std::move(stages), table, std::move(b0));

                PbviOptions full;
                full.belief_budget = 100000;
                full.expansion_depth = horizon;
                full.exhaustive_observations = true;
                PbviOptions sparse;
                sparse.belief_budget = static_cast<int>(model.num_states()) + 1;
                sparse.expansion_depth = 1;
                sparse.seed = derive_seed(opt.seed, 500 + static_cast<std::uint64_t>(instance));

                const double exact = exact_expectimax(model);
                const double v_full = solve_pbvi(model, full).value;
                const double v_sparse = solve_pbvi(model, sparse).value;
                const double tol = 1e-9;
                const bool ok = std::abs(v_full - exact) <= tol && v_sparse <= exact + tol;
                res.passed = res.passed && ok;
                res.lines.push_back(format_line("pool %zu B_con %d H %d #%d: exact %.12g full %.12g sparse %.12g %s",
                                                n, shape.b_con, horizon, rep, exact, v_full, v_sparse,
                                                ok ? "ok" : "MISMATCH"));
            }
        }
    }
    return res;
}

ValidationReport run_validation(const ValidationOptions& opt) {
    ValidationReport report;
    report.suites.push_back(validate_rate_vs_mc(opt));
    report.suites.push_back(validate_transitions_vs_mc(opt));
    report.suites.push_back(validate_pbvi_vs_expectimax(opt));
    return report;
}

}  // namespace cfho
