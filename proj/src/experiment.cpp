#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "cfho/error.hpp"
#include "cfho/experiment.hpp"

namespace cfho {

using nlohmann::json;

namespace {

constexpr std::uint64_t kLayoutStream = 0;
constexpr std::uint64_t kTripStream = 1;
constexpr std::uint64_t kEngineStream = 2;
constexpr std::uint64_t kSharedLayoutTrial = ~std::uint64_t{0};

double round9(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

}  // namespace

double overhead_adjusted_se(double se, int n_ho, double delta, OverheadRule rule) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw ContractViolation("overhead fraction must lie in [0, 1]");
    if (n_ho < 0) throw ContractViolation("handoff count must be non-negative");
    if (rule == OverheadRule::geometric) return std::pow(1.0 - delta, n_ho) * se;
    return std::max(0.0, 1.0 - delta * n_ho) * se;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ContractViolation("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

TrialSetup prepare_trial(const ExperimentConfig& cfg, int trial) {
    if (trial < 0) throw ContractViolation("trial index must be non-negative");
    const std::uint64_t trial_seed = derive_seed(cfg.seeds.master, static_cast<std::uint64_t>(trial));
    const std::uint64_t layout_seed = cfg.network.fixed_layout
                                          ? derive_seed(derive_seed(cfg.seeds.master, kSharedLayoutTrial), kLayoutStream)
                                          : derive_seed(trial_seed, kLayoutStream);
    TrialSetup setup;
    setup.sys = cfg.system_template();
    Rng layout_rng = make_rng(layout_seed);
    NetworkLayout placed = place_aps(static_cast<std::size_t>(cfg.network.num_aps), cfg.network.area_side_m, layout_rng);
    setup.sys.layout.ap_positions = std::move(placed.ap_positions);
    setup.sys.layout.validate();

    Rng trip_rng = make_rng(derive_seed(trial_seed, kTripStream));
    setup.trip = generate_trip(setup.sys, cfg.mobility.trip_cycles, cfg.engine.horizon, trip_rng,
                               {cfg.mobility.start_offset_x_m, cfg.mobility.start_offset_y_m});
    setup.engine_seed = derive_seed(trial_seed, kEngineStream);
    return setup;
}

DerivedPolicy derive_trial_policy(const ExperimentConfig& cfg, int trial, int cycle) {
    cfg.validate();
    if (cycle < 0 || cycle > cfg.mobility.trip_cycles) throw ContractViolation("cycle outside the trip");
    const TrialSetup setup = prepare_trial(cfg, trial);
    const EngineConfig ecfg = cfg.engine_config(Scheme::pomdp_plain);
    TripStatistics stats(setup.sys, setup.trip);
    auto rewards = build_reward_table(static_cast<std::size_t>(ecfg.b_con) + 1, ecfg.b_con,
                                      std::vector<int>(static_cast<std::size_t>(ecfg.b_con) + 1, 1), setup.sys.aging,
                                      setup.sys.radio, setup.sys.quantizer, ecfg.convention);
    const auto& beta = setup.trip.lsf[static_cast<std::size_t>(cycle)];
    const auto base = top_k(beta, ecfg.b_con);
    std::map<std::size_t, ChannelState> observed;
    for (std::size_t b : base) observed[b] = quantize_state(beta[b], setup.sys.quantizer);
    PolicyContext ctx{setup.sys, setup.trip, ecfg, stats, rewards, derive_seed(setup.engine_seed, 1)};
    return derive_policy(ctx, cycle, base, observed);
}

std::vector<CycleRecord> run_trial(const ExperimentConfig& cfg, int trial, std::vector<TrialSummary>* summaries) {
    const TrialSetup setup = prepare_trial(cfg, trial);
    const SystemModel& sys = setup.sys;
    const Trip& trip = setup.trip;
    const std::uint64_t engine_seed = setup.engine_seed;

    std::vector<CycleRecord> records;
    for (Scheme scheme : cfg.engine.schemes) {
        const EngineConfig ecfg = cfg.engine_config(scheme);
        const auto decisions = run_scheme(sys, trip, ecfg, engine_seed);
        int cum = 0;
        std::vector<double> se;
        se.reserve(decisions.size());
        for (const auto& d : decisions) {
            CycleRecord r;
            r.trial = trial;
            r.t = d.cycle;
            r.scheme = scheme;
            r.serving_set = d.serving_set;
            r.se = d.se;
            r.n_ho = d.n_ho;
            cum += d.n_ho;
            r.cum_ho = cum;
            r.se_adj = overhead_adjusted_se(d.se, d.n_ho, cfg.overhead.delta, cfg.overhead.rule);
            r.triggered = d.triggered;
            se.push_back(d.se);
            records.push_back(std::move(r));
        }
        if (summaries) {
            TrialSummary s;
            s.trial = trial;
            s.scheme = scheme;
            s.total_ho = cum;
            if (!se.empty()) {
                s.se_p10 = quantile(se, 0.1);
                double total = 0.0;
                for (double v : se) total += v;
                s.se_mean = total / static_cast<double>(se.size());
            }
            summaries->push_back(s);
        }
    }
    return records;
}

SimMetrics run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const int trials = cfg.seeds.trials;
    std::vector<std::vector<CycleRecord>> per_trial(static_cast<std::size_t>(trials));
    std::vector<std::vector<TrialSummary>> per_summary(static_cast<std::size_t>(trials));

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= trials) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return;
            }
            try {
                auto idx = static_cast<std::size_t>(i);
                per_trial[idx] = run_trial(cfg, i, &per_summary[idx]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const int n_workers = std::max(1, std::min(cfg.workers, trials));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    SimMetrics out;
    out.schemes = cfg.engine.schemes;
    for (int i = 0; i < trials; ++i) {
        auto& r = per_trial[static_cast<std::size_t>(i)];
        out.records.insert(out.records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
        auto& s = per_summary[static_cast<std::size_t>(i)];
        out.trials.insert(out.trials.end(), s.begin(), s.end());
    }
    return out;
}

json summarize(const SimMetrics& metrics, int trip_cycles) {
    json schemes = json::object();
    std::map<Scheme, double> mean_total;
    for (Scheme scheme : metrics.schemes) {
        std::vector<double> se;
        std::vector<double> se_adj;
        std::vector<double> cum_sum(static_cast<std::size_t>(std::max(trip_cycles, 0)), 0.0);
        std::vector<int> cum_count(cum_sum.size(), 0);
        for (const auto& r : metrics.records) {
            if (r.scheme != scheme) continue;
            se.push_back(r.se);
            se_adj.push_back(r.se_adj);
            if (r.t >= 1 && r.t <= trip_cycles) {
                cum_sum[static_cast<std::size_t>(r.t) - 1] += r.cum_ho;
                ++cum_count[static_cast<std::size_t>(r.t) - 1];
            }
        }
        int n_trials = 0;
        double total_ho = 0.0;
        for (const auto& t : metrics.trials) {
            if (t.scheme != scheme) continue;
            ++n_trials;
            total_ho += t.total_ho;
        }
        json entry;
        entry["trials"] = n_trials;
        entry["samples"] = se.size();
        json q = json::array();
        json q_adj = json::array();
        if (!se.empty()) {
            for (int i = 0; i <= 100; ++i) {
                q.push_back(round9(quantile(se, i / 100.0)));
                q_adj.push_back(round9(quantile(se_adj, i / 100.0)));
            }
            double sum = 0.0;
            for (double v : se) sum += v;
            entry["se_p10_nats"] = round9(quantile(se, 0.1));
            entry["se_mean_nats"] = round9(sum / static_cast<double>(se.size()));
            entry["se_adj_p10_nats"] = round9(quantile(se_adj, 0.1));
        } else {
            entry["se_p10_nats"] = nullptr;
            entry["se_mean_nats"] = nullptr;
            entry["se_adj_p10_nats"] = nullptr;
        }
        entry["se_quantiles_nats"] = std::move(q);
        entry["se_adj_quantiles_nats"] = std::move(q_adj);
        json curve = json::array();
        for (std::size_t i = 0; i < cum_sum.size(); ++i) {
            curve.push_back(cum_count[i] ? round9(cum_sum[i] / cum_count[i]) : 0.0);
        }
        entry["mean_cum_ho_curve"] = std::move(curve);
        const double mean = n_trials ? total_ho / n_trials : 0.0;
        mean_total[scheme] = mean;
        entry["mean_total_ho"] = round9(mean);
        schemes[to_string(scheme)] = std::move(entry);
    }
    json ratios = json::object();
    for (Scheme a : metrics.schemes) {
        for (Scheme b : metrics.schemes) {
            if (a == b || mean_total[b] <= 0.0) continue;
            ratios[to_string(a) + "_vs_" + to_string(b)] = round9(mean_total[a] / mean_total[b]);
        }
    }
    json out;
    out["quantile_grid_step"] = 0.01;
    out["trip_cycles"] = trip_cycles;
    out["schemes"] = std::move(schemes);
    out["cum_ho_ratios"] = std::move(ratios);
    return out;
}

}  // namespace cfho
