#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>

#include "cfho/error.hpp"
#include "cfho/pomdp.hpp"

namespace cfho {

namespace {

constexpr std::size_t kMaxPool = 20;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const StageStats& stage_at(const PomdpModel& m, int stage) {
    if (stage < 0 || stage >= static_cast<int>(m.stages.size())) {
        throw ContractViolation("stage " + std::to_string(stage) + " outside the model horizon");
    }
    return m.stages[static_cast<std::size_t>(stage)];
}

double bit_prob(double p_good, bool good) { return good ? p_good : 1.0 - p_good; }

}  // namespace

void Belief::validate() const {
    for (double u : upsilon) {
        if (!(u >= 0.0 && u <= 1.0)) throw ContractViolation("belief entry outside [0, 1]");
    }
}

double PomdpModel::transition(int stage, std::size_t from, std::size_t to) const {
    if (stage < 1) throw ContractViolation("transitions are defined for stages 1..H");
    const StageStats& st = stage_at(*this, stage);
    double p = 1.0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        const bool was_good = (from >> j) & 1U;
        const bool is_good = (to >> j) & 1U;
        const double p_good = was_good ? st.trans[j].p11 : st.trans[j].p01;
        p *= bit_prob(p_good, is_good);
    }
    return p;
}

double PomdpModel::observation_prob(int stage, std::size_t action, std::size_t state, std::size_t obs) const {
    const StageStats& st = stage_at(*this, stage);
    const std::uint32_t mask = actions.at(action);
    if (((state ^ obs) & mask) != 0) return 0.0;
    double p = 1.0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if ((mask >> j) & 1U) continue;
        p *= bit_prob(st.prob_good[j], (obs >> j) & 1U);
    }
    return p;
}

void PomdpModel::validate() const {
    if (pool.empty() || pool.size() > kMaxPool) throw ContractViolation("unsupported pool size");
    if (b_con < 1 || b_con > static_cast<int>(pool.size())) throw ContractViolation("B_con must lie in [1, |pool|]");
    if (horizon < 1) throw ContractViolation("horizon must be at least 1");
    if (!(discount >= 0.0 && discount < 1.0)) throw ContractViolation("discount must lie in [0, 1)");
    if (stages.size() != static_cast<std::size_t>(horizon) + 1) throw ContractViolation("stage list must cover 0..H");
    for (const auto& st : stages) {
        if (st.trans.size() != pool.size() || st.prob_good.size() != pool.size()) {
            throw ContractViolation("stage statistics must cover every pool AP");
        }
        for (const auto& tp : st.trans) {
            if (!(tp.p11 >= 0.0 && tp.p11 <= 1.0 && tp.p01 >= 0.0 && tp.p01 <= 1.0)) {
                throw ContractViolation("transition probability outside [0, 1]");
            }
        }
        for (double p : st.prob_good) {
            if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("marginal probability outside [0, 1]");
        }
    }
    if (actions != enumerate_actions(pool.size(), b_con)) throw ContractViolation("action list is inconsistent");
    if (!rewards || rewards->size() != num_states() * num_actions()) {
        throw ContractViolation("reward table must hold one entry per (state, action)");
    }
    for (double r : *rewards) {
        if (!std::isfinite(r)) throw ContractViolation("reward table contains a non-finite entry");
    }
    if (initial_belief.upsilon.size() != pool.size()) throw ContractViolation("initial belief must cover the pool");
    initial_belief.validate();
}

std::vector<std::uint32_t> enumerate_actions(std::size_t pool_size, int b_con) {
    if (pool_size == 0 || pool_size > kMaxPool) throw ContractViolation("unsupported pool size");
    if (b_con < 1 || b_con > static_cast<int>(pool_size)) throw ContractViolation("B_con must lie in [1, |pool|]");
    std::vector<std::uint32_t> out;
    const std::uint32_t limit = std::uint32_t{1} << pool_size;
    for (std::uint32_t m = 0; m < limit; ++m) {
        if (std::popcount(m) == b_con) out.push_back(m);
    }
    return out;
}

std::shared_ptr<const RewardTable> build_reward_table(std::size_t pool_size, int b_con, const std::vector<int>& loads,
                                                      const AgingProfile& aging, const RadioParams& radio,
                                                      const StateQuantizer& q, MomentConvention conv) {
    const auto actions = enumerate_actions(pool_size, b_con);
    const std::size_t n_states = std::size_t{1} << pool_size;
    auto table = std::make_shared<RewardTable>(n_states * actions.size());
    // The reward only sees the states of the selected APs.
    std::unordered_map<std::uint64_t, double> memo;
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < actions.size(); ++a) {
            const std::uint32_t mask = actions[a];
            const std::uint64_t key = (std::uint64_t{mask} << 32) | (static_cast<std::uint32_t>(s) & mask);
            auto it = memo.find(key);
            if (it == memo.end()) {
                const double r = reward(static_cast<std::uint32_t>(s) & mask, mask, pool_size, b_con, loads, aging,
                                        radio, q, conv);
                it = memo.emplace(key, r).first;
            }
            (*table)[s * actions.size() + a] = it->second;
        }
    }
    return table;
}

std::vector<StageStats> stage_stats_from_distances(const std::vector<std::vector<double>>& distances,
                                                   const ModelParams& params) {
    if (distances.empty()) throw ConfigError("distance predictions must include the current cycle");
    const std::size_t n = distances.front().size();
    std::vector<StageStats> out(distances.size());
    for (std::size_t k = 0; k < distances.size(); ++k) {
        if (distances[k].size() != n) throw ConfigError("distance predictions must cover every pool AP");
        out[k].prob_good.resize(n);
        out[k].trans.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            out[k].prob_good[j] = prob_good(distances[k][j], params.quantizer, params.shadowing, params.path_loss);
            if (k > 0) {
                out[k].trans[j] = trans_probs(distances[k - 1][j], distances[k][j], params.quantizer,
                                              params.shadowing, params.path_loss, params.speed, params.step_duration);
            }
        }
    }
    return out;
}

Belief initial_belief(const std::vector<std::size_t>& pool, const std::map<std::size_t, ChannelState>& observed,
                      const std::map<std::size_t, double>& prior, const StageStats& stage0) {
    if (stage0.prob_good.size() != pool.size()) throw ContractViolation("stage-0 marginals must cover the pool");
    Belief b;
    b.upsilon.resize(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (auto it = observed.find(pool[j]); it != observed.end()) {
            b.upsilon[j] = it->second == ChannelState::good ? 1.0 : 0.0;
        } else if (auto pt = prior.find(pool[j]); pt != prior.end()) {
            b.upsilon[j] = std::clamp(pt->second, 0.0, 1.0);
        } else {
            b.upsilon[j] = stage0.prob_good[j];
        }
    }
    return b;
}

PomdpModel assemble_model(std::vector<std::size_t> pool, int b_con, int horizon, double discount,
                          std::vector<StageStats> stages, std::shared_ptr<const RewardTable> rewards,
                          Belief initial) {
    PomdpModel m;
    m.pool = std::move(pool);
    m.b_con = b_con;
    m.horizon = horizon;
    m.discount = discount;
    m.actions = enumerate_actions(m.pool.size(), b_con);
    m.stages = std::move(stages);
    m.rewards = std::move(rewards);
    m.initial_belief = std::move(initial);
    m.validate();
    return m;
}

PomdpModel build_model(const std::vector<std::size_t>& pool, const std::map<std::size_t, ChannelState>& observed,
                       const std::vector<std::vector<double>>& predicted_distances, const ModelParams& params,
                       std::shared_ptr<const RewardTable> rewards) {
    if (static_cast<int>(pool.size()) != params.b_con + 1) {
        throw ContractViolation("candidate pool must hold B_con + 1 APs");
    }
    if (predicted_distances.size() < static_cast<std::size_t>(params.horizon) + 1) {
        throw ConfigError("distance predictions must cover stages 0..H");
    }
    std::vector<std::vector<double>> rows(predicted_distances.begin(),
                                          predicted_distances.begin() + params.horizon + 1);
    auto stages = stage_stats_from_distances(rows, params);
    Belief b0 = initial_belief(pool, observed, {}, stages.front());
    return assemble_model(pool, params.b_con, params.horizon, params.discount, std::move(stages), std::move(rewards),
                          std::move(b0));
}

std::vector<double> expand_belief(const Belief& belief) {
    const std::size_t n = belief.upsilon.size();
    if (n > kMaxPool) throw ContractViolation("belief too large to expand");
    std::vector<double> out(std::size_t{1} << n, 1.0);
    // Build the product one AP at a time: after processing j, entries
    // 0..2^(j+1)-1 hold the joint over the first j+1 APs.
    out[0] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t half = std::size_t{1} << j;
        const double u = belief.upsilon[j];
        for (std::size_t s = 0; s < half; ++s) {
            out[s + half] = out[s] * u;
            out[s] = out[s] * (1.0 - u);
        }
    }
    return out;
}

Belief predict(const Belief& belief, const StageStats& next) {
    if (next.trans.size() != belief.upsilon.size()) throw ContractViolation("stage does not match belief size");
    Belief out = belief;
    for (std::size_t j = 0; j < belief.upsilon.size(); ++j) {
        const double u = belief.upsilon[j];
        out.upsilon[j] = u * next.trans[j].p11 + (1.0 - u) * next.trans[j].p01;
    }
    return out;
}

Belief belief_update(const Belief& belief, std::size_t action, const Observation& obs, const PomdpModel& model,
                     int stage) {
    if (stage < 1 || stage > model.horizon) throw ContractViolation("belief update stage must lie in 1..H");
    if (belief.upsilon.size() != model.pool_size()) throw ContractViolation("belief does not match the pool");
    const std::uint32_t mask = model.actions.at(action);
    if (obs.mask != mask) throw ContractViolation("observation must cover exactly the connected APs");
    if ((obs.bits & ~mask) != 0) throw ContractViolation("observation reported for an unconnected AP");
    const StageStats& st = stage_at(model, stage);
    Belief out;
    out.upsilon.resize(belief.upsilon.size());
    for (std::size_t j = 0; j < belief.upsilon.size(); ++j) {
        const TransitionPair& tp = st.trans[j];
        if ((mask >> j) & 1U) {
            out.upsilon[j] = ((obs.bits >> j) & 1U) ? tp.p11 : tp.p01;
        } else {
            const double u = belief.upsilon[j];
            out.upsilon[j] = u * tp.p11 + (1.0 - u) * tp.p01;
        }
    }
    return out;
}

namespace {

// Index of the best alpha vector for a joint belief, lowest action on ties.
std::size_t best_alpha(const std::vector<AlphaVector>& alphas, const std::vector<double>& joint, double* value_out) {
    if (alphas.empty()) throw ContractViolation("policy stage holds no alpha vectors");
    std::vector<double> values(alphas.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        double v = 0.0;
        for (std::size_t s = 0; s < joint.size(); ++s) v += alphas[i].values[s] * joint[s];
        values[i] = v;
        best = std::max(best, v);
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    std::size_t pick = alphas.size();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (values[i] < best - tol) continue;
        if (pick == alphas.size() || alphas[i].action < alphas[pick].action) pick = i;
    }
    if (value_out) *value_out = best;
    return pick;
}

}  // namespace

std::size_t act(const StagePolicy& policy, const Belief& belief, int stage) {
    if (stage < 1 || stage > policy.horizon()) throw ContractViolation("policy stage out of range");
    const auto joint = expand_belief(belief);
    const auto& alphas = policy.stages[static_cast<std::size_t>(stage - 1)];
    return alphas[best_alpha(alphas, joint, nullptr)].action;
}

double policy_value(const StagePolicy& policy, const Belief& belief, int stage) {
    if (stage < 1 || stage > policy.horizon()) throw ContractViolation("policy stage out of range");
    const auto joint = expand_belief(belief);
    double v = 0.0;
    best_alpha(policy.stages[static_cast<std::size_t>(stage - 1)], joint, &v);
    return v;
}

void write_model(std::ostream& os, const PomdpModel& model) {
    model.validate();
    const std::size_t ns = model.num_states();
    const std::size_t na = model.num_actions();
    os << "# cfho-pomdp 1\n";
    os << "pool:";
    for (std::size_t b : model.pool) os << ' ' << b;
    os << "\nb_con: " << model.b_con << "\nhorizon: " << model.horizon << "\ndiscount: " << fmt(model.discount)
       << "\nstates: " << ns << "\nactions: " << na << "\nobservations: " << model.num_observations() << '\n';
    os << "action_masks:";
    for (std::uint32_t m : model.actions) os << ' ' << m;
    os << "\ninitial_factors:";
    for (double u : model.initial_belief.upsilon) os << ' ' << fmt(u);
    os << "\ninitial_belief:";
    for (double p : expand_belief(model.initial_belief)) os << ' ' << fmt(p);
    os << '\n';
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) os << "R " << s << ' ' << a << ' ' << fmt(model.reward(s, a)) << '\n';
    }
    for (int k = 1; k <= model.horizon; ++k) {
        os << "stage " << k << '\n';
        for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t t = 0; t < ns; ++t) {
                const double p = model.transition(k, s, t);
                if (p != 0.0) os << "T " << s << ' ' << t << ' ' << fmt(p) << '\n';
            }
        }
        for (std::size_t a = 0; a < na; ++a) {
            for (std::size_t s = 0; s < ns; ++s) {
                for (std::size_t o = 0; o < ns; ++o) {
                    const double p = model.observation_prob(k, a, s, o);
                    if (p != 0.0) os << "O " << a << ' ' << s << ' ' << o << ' ' << fmt(p) << '\n';
                }
            }
        }
    }
    os << "end\n";
}

}  // namespace cfho
