#include "cfho/handoff.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "cfho/error.hpp"

namespace cfho {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::pomdp_plain: return "pomdp_plain";
        case Scheme::pomdp_ho_min: return "pomdp_ho_min";
        case Scheme::lsf_time: return "lsf_time";
        case Scheme::lsf_threshold: return "lsf_threshold";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "pomdp_plain") return Scheme::pomdp_plain;
    if (name == "pomdp_ho_min") return Scheme::pomdp_ho_min;
    if (name == "lsf_time") return Scheme::lsf_time;
    if (name == "lsf_threshold") return Scheme::lsf_threshold;
    throw ConfigError("unknown scheme '" + name + "'");
}

void EngineConfig::validate(std::size_t num_aps) const {
    if (b_con < 1 || static_cast<std::size_t>(b_con) >= num_aps) {
        throw ConfigError("B_con must satisfy 1 <= B_con < number of APs");
    }
    if (b_con + 1 > 20) throw ConfigError("B_con too large for the candidate-pool state space");
    if (horizon < 1) throw ConfigError("time horizon must be at least 1");
    if (!(r_threshold >= 0.0)) throw ConfigError("rate threshold must be non-negative");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount must lie in [0, 1)");
    if (pbvi.belief_budget < 1) throw ConfigError("belief budget must be positive");
    if (pbvi.expansion_depth < 0) throw ConfigError("expansion depth must be non-negative");
}

Trip generate_trip(const SystemModel& sys, int cycles, int lookahead, Rng& rng, Point2 start_offset) {
    if (cycles < 0 || lookahead < 0) throw ConfigError("trip length must be non-negative");
    Trip trip;
    trip.cycles = cycles;
    TrajectoryState traj = start_trip(sys.layout, sys.speed, sys.step_duration, rng, start_offset);
    LsfProcess lsf = init_lsf(sys.layout, sys.shadowing, sys.path_loss, traj, rng);
    trip.positions.push_back(traj.position);
    trip.lsf.push_back(lsf.lsf);
    for (int t = 1; t <= cycles + lookahead; ++t) {
        traj = advance(traj, sys.layout);
        trip.positions.push_back(traj.position);
        if (t <= cycles) {
            lsf = step_lsf(lsf, sys.layout, sys.shadowing, sys.path_loss, traj, rng);
            trip.lsf.push_back(lsf.lsf);
        }
    }
    return trip;
}

double serving_se(const SystemModel& sys, const Trip& trip, int cycle, const std::vector<std::size_t>& serving,
                  MomentConvention conv) {
    const auto& beta = trip.lsf.at(static_cast<std::size_t>(cycle));
    std::vector<double> gains;
    gains.reserve(serving.size());
    for (std::size_t b : serving) gains.push_back(beta.at(b));
    return single_user_se(gains, std::vector<int>(gains.size(), 1), sys.aging, sys.radio, conv);
}

std::vector<std::size_t> top_k(const std::vector<double>& gains, int k) {
    if (k < 0 || static_cast<std::size_t>(k) > gains.size()) throw ContractViolation("top_k: k out of range");
    std::vector<std::size_t> idx(gains.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

int count_handoffs(const std::vector<std::size_t>& before, const std::vector<std::size_t>& now) {
    int n = 0;
    for (std::size_t b : now) {
        if (std::find(before.begin(), before.end(), b) == before.end()) ++n;
    }
    return n;
}

TripStatistics::TripStatistics(const SystemModel& sys, const Trip& trip)
    : sys_(sys), trip_(trip), cache_(trip.positions.size()) {}

const StageStats& TripStatistics::at(int cycle) {
    if (cycle < 0 || static_cast<std::size_t>(cycle) >= trip_.positions.size()) {
        throw ContractViolation("trajectory prediction does not reach cycle " + std::to_string(cycle));
    }
    auto& slot = cache_[static_cast<std::size_t>(cycle)];
    if (slot) return *slot;
    const std::size_t B = sys_.layout.size();
    auto st = std::make_unique<StageStats>();
    st->prob_good.resize(B);
    st->trans.resize(B);
    const Point2 here = trip_.positions[static_cast<std::size_t>(cycle)];
    for (std::size_t b = 0; b < B; ++b) {
        const double d = distance_2d(here, b, sys_.layout);
        st->prob_good[b] = prob_good(d, sys_.quantizer, sys_.shadowing, sys_.path_loss);
        if (cycle > 0) {
            const double d_prev = distance_2d(trip_.positions[static_cast<std::size_t>(cycle) - 1], b, sys_.layout);
            st->trans[b] = trans_probs(d_prev, d, sys_.quantizer, sys_.shadowing, sys_.path_loss, sys_.speed,
                                       sys_.step_duration);
        }
    }
    slot = std::move(st);
    return *slot;
}

DerivedPolicy derive_policy(PolicyContext& ctx, int anchor_cycle, const std::vector<std::size_t>& base_set,
                            const std::map<std::size_t, ChannelState>& observed,
                            const std::map<std::size_t, double>& prior) {
    const EngineConfig& cfg = ctx.cfg;
    const std::size_t B = ctx.sys.layout.size();
    if (static_cast<int>(base_set.size()) != cfg.b_con) {
        throw ContractViolation("derive_policy: base set must hold exactly B_con APs");
    }
    std::vector<std::size_t> base = base_set;
    std::sort(base.begin(), base.end());
    if (std::adjacent_find(base.begin(), base.end()) != base.end()) {
        throw ContractViolation("derive_policy: duplicate AP in base set");
    }
    for (std::size_t b : base) {
        if (b >= B) throw ContractViolation("derive_policy: base AP index out of range");
    }
    std::vector<std::size_t> others;
    for (std::size_t b = 0; b < B; ++b) {
        if (!std::binary_search(base.begin(), base.end(), b)) others.push_back(b);
    }

    const int H = cfg.horizon;
    std::vector<const StageStats*> stage_all(static_cast<std::size_t>(H) + 1);
    for (int k = 0; k <= H; ++k) stage_all[static_cast<std::size_t>(k)] = &ctx.stats.at(anchor_cycle + k);

    const std::size_t pool_n = base.size() + 1;
    DerivedPolicy best;
    bool have = false;
    best.subproblems = 0;
    for (std::size_t l = 0; l < others.size(); ++l) {
        std::vector<std::size_t> pool = base;
        pool.push_back(others[l]);
        std::vector<StageStats> stages(static_cast<std::size_t>(H) + 1);
        for (int k = 0; k <= H; ++k) {
            auto& st = stages[static_cast<std::size_t>(k)];
            const StageStats& all = *stage_all[static_cast<std::size_t>(k)];
            st.prob_good.resize(pool_n);
            st.trans.resize(pool_n);
            for (std::size_t j = 0; j < pool_n; ++j) {
                st.prob_good[j] = all.prob_good[pool[j]];
                st.trans[j] = all.trans[pool[j]];
            }
        }
        Belief b0 = initial_belief(pool, observed, prior, stages.front());
        PomdpModel model =
            assemble_model(pool, cfg.b_con, H, cfg.gamma, std::move(stages), ctx.rewards, std::move(b0));
        PbviOptions opts = cfg.pbvi;
        opts.seed = derive_seed(ctx.seed, l);
        PbviResult res = solve_pbvi(model, opts);
        ++best.subproblems;
        best.subproblem_values.push_back(res.value);
        if (!have || res.value > best.value) {
            have = true;
            best.value = res.value;
            best.best_subproblem = l;
            best.policy = std::move(res.policy);
            best.model = std::move(model);
            best.pool = pool;
        }
    }
    if (!have) throw ContractViolation("derive_policy: no candidate AP outside the base set");
    return best;
}

namespace {

std::vector<std::size_t> selected_aps(const std::vector<std::size_t>& pool, std::uint32_t mask) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if ((mask >> j) & 1U) out.push_back(pool[j]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::map<std::size_t, ChannelState> observe(const SystemModel& sys, const Trip& trip, int cycle,
                                            const std::vector<std::size_t>& aps) {
    std::map<std::size_t, ChannelState> out;
    const auto& beta = trip.lsf.at(static_cast<std::size_t>(cycle));
    for (std::size_t b : aps) out[b] = quantize_state(beta.at(b), sys.quantizer);
    return out;
}

// Beliefs of the pool APs left unconnected by the chosen action.
void remember_hidden(std::map<std::size_t, double>& tracked, const std::vector<std::size_t>& pool,
                     const Belief& belief, std::uint32_t mask) {
    tracked.clear();
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (!((mask >> j) & 1U)) tracked[pool[j]] = belief.upsilon[j];
    }
}

HandoffDecision record(const SystemModel& sys, const Trip& trip, int t, const std::vector<std::size_t>& prev,
                       std::vector<std::size_t> now, bool triggered, MomentConvention conv) {
    HandoffDecision d;
    d.cycle = t;
    std::sort(now.begin(), now.end());
    d.n_ho = count_handoffs(prev, now);
    d.serving_set = std::move(now);
    d.triggered = triggered;
    d.se = serving_se(sys, trip, t, d.serving_set, conv);
    return d;
}

void check_inputs(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg, bool needs_lookahead) {
    cfg.validate(sys.layout.size());
    if (trip.lsf.size() != static_cast<std::size_t>(trip.cycles) + 1) {
        throw ContractViolation("trip LSF trace must cover cycles 0..N");
    }
    const std::size_t need = static_cast<std::size_t>(trip.cycles) + 1 +
                             (needs_lookahead ? static_cast<std::size_t>(cfg.horizon) : 0);
    if (trip.positions.size() < need) throw ContractViolation("trip positions do not cover the policy horizon");
}

}  // namespace

std::vector<HandoffDecision> run_pomdp_plain(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg,
                                             std::uint64_t seed) {
    check_inputs(sys, trip, cfg, true);
    TripStatistics stats(sys, trip);
    auto rewards = build_reward_table(static_cast<std::size_t>(cfg.b_con) + 1, cfg.b_con,
                                      std::vector<int>(static_cast<std::size_t>(cfg.b_con) + 1, 1), sys.aging,
                                      sys.radio, sys.quantizer, cfg.convention);
    std::vector<HandoffDecision> out;
    std::vector<std::size_t> serving = top_k(trip.lsf.front(), cfg.b_con);
    std::map<std::size_t, double> tracked;
    std::optional<DerivedPolicy> current;
    Belief belief;
    std::size_t last_action = 0;
    int stage = 0;
    for (int t = 1; t <= trip.cycles; ++t) {
        if ((t - 1) % cfg.horizon == 0) {
            PolicyContext ctx{sys, trip, cfg, stats, rewards, derive_seed(seed, static_cast<std::uint64_t>(t))};
            current = derive_policy(ctx, t - 1, serving, observe(sys, trip, t - 1, serving), tracked);
            stage = 1;
            belief = predict(current->model.initial_belief, current->model.stages[1]);
        } else {
            ++stage;
            const std::uint32_t mask = current->model.actions[last_action];
            Observation obs{mask, 0};
            const auto& beta = trip.lsf[static_cast<std::size_t>(t) - 1];
            for (std::size_t j = 0; j < current->pool.size(); ++j) {
                if (((mask >> j) & 1U) && quantize_state(beta[current->pool[j]], sys.quantizer) == ChannelState::good) {
                    obs.bits |= std::uint32_t{1} << j;
                }
            }
            belief = belief_update(belief, last_action, obs, current->model, stage);
        }
        last_action = act(current->policy, belief, stage);
        const std::uint32_t mask = current->model.actions[last_action];
        remember_hidden(tracked, current->pool, belief, mask);
        HandoffDecision d = record(sys, trip, t, serving, selected_aps(current->pool, mask), false, cfg.convention);
        d.triggered = d.n_ho > 0;
        serving = d.serving_set;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<HandoffDecision> run_pomdp_ho_min(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg,
                                              std::uint64_t seed) {
    check_inputs(sys, trip, cfg, true);
    TripStatistics stats(sys, trip);
    auto rewards = build_reward_table(static_cast<std::size_t>(cfg.b_con) + 1, cfg.b_con,
                                      std::vector<int>(static_cast<std::size_t>(cfg.b_con) + 1, 1), sys.aging,
                                      sys.radio, sys.quantizer, cfg.convention);
    std::vector<HandoffDecision> out;
    std::vector<std::size_t> serving = top_k(trip.lsf.front(), cfg.b_con);
    std::vector<std::size_t> potential = serving;
    double rate_prev = serving_se(sys, trip, 0, serving, cfg.convention);
    std::map<std::size_t, double> tracked;

    std::optional<DerivedPolicy> cached;
    std::vector<std::size_t> cached_base;
    int cached_at = 0;
    Belief belief;

    for (int t = 1; t <= trip.cycles; ++t) {
        const auto observed = observe(sys, trip, t - 1, serving);
        const bool reuse = cfg.ho_min_cache && cached && cached_base == potential && t - cached_at < cfg.horizon;
        int stage = 1;
        if (reuse) {
            stage = t - cached_at + 1;
            const StageStats& st = cached->model.stages[static_cast<std::size_t>(stage)];
            for (std::size_t j = 0; j < cached->pool.size(); ++j) {
                const TransitionPair& tp = st.trans[j];
                auto it = observed.find(cached->pool[j]);
                if (it != observed.end()) {
                    belief.upsilon[j] = it->second == ChannelState::good ? tp.p11 : tp.p01;
                } else {
                    const double u = belief.upsilon[j];
                    belief.upsilon[j] = u * tp.p11 + (1.0 - u) * tp.p01;
                }
            }
        } else {
            PolicyContext ctx{sys, trip, cfg, stats, rewards, derive_seed(seed, static_cast<std::uint64_t>(t))};
            cached = derive_policy(ctx, t - 1, potential, observed, tracked);
            cached_base = potential;
            cached_at = t;
            belief = predict(cached->model.initial_belief, cached->model.stages[1]);
        }
        const std::size_t a = act(cached->policy, belief, stage);
        const std::uint32_t mask = cached->model.actions[a];
        remember_hidden(tracked, cached->pool, belief, mask);
        potential = selected_aps(cached->pool, mask);

        const bool trigger = rate_prev < cfg.r_threshold;
        HandoffDecision d = record(sys, trip, t, serving, trigger ? potential : serving, trigger, cfg.convention);
        serving = d.serving_set;
        rate_prev = d.se;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<HandoffDecision> run_lsf_time(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg) {
    check_inputs(sys, trip, cfg, false);
    std::vector<HandoffDecision> out;
    std::vector<std::size_t> serving = top_k(trip.lsf.front(), cfg.b_con);
    for (int t = 1; t <= trip.cycles; ++t) {
        HandoffDecision d = record(sys, trip, t, serving, top_k(trip.lsf[static_cast<std::size_t>(t)], cfg.b_con),
                                   false, cfg.convention);
        d.triggered = d.n_ho > 0;
        serving = d.serving_set;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<HandoffDecision> run_lsf_threshold(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg) {
    check_inputs(sys, trip, cfg, false);
    std::vector<HandoffDecision> out;
    std::vector<std::size_t> serving = top_k(trip.lsf.front(), cfg.b_con);
    double rate_prev = serving_se(sys, trip, 0, serving, cfg.convention);
    for (int t = 1; t <= trip.cycles; ++t) {
        const bool trigger = rate_prev < cfg.r_threshold;
        auto next = trigger ? top_k(trip.lsf[static_cast<std::size_t>(t)], cfg.b_con) : serving;
        HandoffDecision d = record(sys, trip, t, serving, std::move(next), trigger, cfg.convention);
        serving = d.serving_set;
        rate_prev = d.se;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<HandoffDecision> run_scheme(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg,
                                        std::uint64_t seed) {
    switch (cfg.scheme) {
        case Scheme::pomdp_plain: return run_pomdp_plain(sys, trip, cfg, seed);
        case Scheme::pomdp_ho_min: return run_pomdp_ho_min(sys, trip, cfg, seed);
        case Scheme::lsf_time: return run_lsf_time(sys, trip, cfg);
        case Scheme::lsf_threshold: return run_lsf_threshold(sys, trip, cfg);
    }
    throw ConfigError("unknown scheme");
}

}  // namespace cfho
