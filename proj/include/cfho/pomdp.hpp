#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cfho/channel.hpp"
#include "cfho/rate.hpp"

namespace cfho {

/// Factorized belief: probability that each pool AP is in the good state.
struct Belief {
    std::vector<double> upsilon;

    void validate() const;
};

/// Per-stage channel statistics of the pool APs. Entry k of a model's stage
/// list describes the move from cycle k-1 to cycle k (k = 0 carries only the
/// marginals of the current cycle).
struct StageStats {
    std::vector<TransitionPair> trans;  // one per pool AP
    std::vector<double> prob_good;      // marginal good-state probability per pool AP
};

using RewardTable = std::vector<double>;  // [state * num_actions + action]

/// Time-indexed POMDP over a candidate AP pool. State bit j is the channel
/// state of pool position j (1 = good); actions are the B_con-subsets of the
/// pool as bit masks in increasing numeric order; observations share the
/// state index space.
struct PomdpModel {
    std::vector<std::size_t> pool;
    int b_con = 0;
    int horizon = 1;
    double discount = 0.95;
    std::vector<std::uint32_t> actions;
    std::vector<StageStats> stages;  // size horizon + 1
    std::shared_ptr<const RewardTable> rewards;
    Belief initial_belief;  // over the states of the current cycle

    std::size_t pool_size() const noexcept { return pool.size(); }
    std::size_t num_states() const noexcept { return std::size_t{1} << pool.size(); }
    std::size_t num_actions() const noexcept { return actions.size(); }
    std::size_t num_observations() const noexcept { return num_states(); }
    double reward(std::size_t state, std::size_t action) const { return (*rewards)[state * num_actions() + action]; }
    /// Expanded transition matrix entry P(s' | s) into `stage`.
    double transition(int stage, std::size_t from, std::size_t to) const;
    /// Literal observation probability: connected APs reveal their state,
    /// unconnected entries follow the stage marginal independently of the state.
    double observation_prob(int stage, std::size_t action, std::size_t state, std::size_t obs) const;
    void validate() const;
};

/// All B_con-subsets of a pool of `pool_size` positions as masks, ascending.
std::vector<std::uint32_t> enumerate_actions(std::size_t pool_size, int b_con);

/// Reward table for a pool under equal per-AP loads.
std::shared_ptr<const RewardTable> build_reward_table(std::size_t pool_size, int b_con, const std::vector<int>& loads,
                                                      const AgingProfile& aging, const RadioParams& radio,
                                                      const StateQuantizer& q,
                                                      MomentConvention conv = MomentConvention::scaled);

struct ModelParams {
    int b_con = 5;
    int horizon = 10;
    double discount = 0.95;
    StateQuantizer quantizer;
    ShadowingParams shadowing;
    PathLossParams path_loss;
    double speed = 10.0;
    double step_duration = 1.0;
};

/// Stage statistics from predicted planar distances (rows = stages 0..H,
/// columns = pool positions).
std::vector<StageStats> stage_stats_from_distances(const std::vector<std::vector<double>>& distances,
                                                   const ModelParams& params);

/// Initial factorized belief: observed APs are pinned to their state, others
/// take the supplied prior or, failing that, the stage-0 marginal.
Belief initial_belief(const std::vector<std::size_t>& pool, const std::map<std::size_t, ChannelState>& observed,
                      const std::map<std::size_t, double>& prior, const StageStats& stage0);

PomdpModel assemble_model(std::vector<std::size_t> pool, int b_con, int horizon, double discount,
                          std::vector<StageStats> stages, std::shared_ptr<const RewardTable> rewards,
                          Belief initial);

PomdpModel build_model(const std::vector<std::size_t>& pool, const std::map<std::size_t, ChannelState>& observed,
                       const std::vector<std::vector<double>>& predicted_distances, const ModelParams& params,
                       std::shared_ptr<const RewardTable> rewards);

/// Joint probability vector of a factorized belief.
std::vector<double> expand_belief(const Belief& belief);

/// Belief over the next cycle without any observation.
Belief predict(const Belief& belief, const StageStats& next);

struct Observation {
    std::uint32_t mask = 0;  // connected pool positions
    std::uint32_t bits = 0;  // observed states on the mask (1 = good)
};

/// Filters a belief with the observation of the connected APs and propagates
/// it through the transitions into stage `stage` (1..H).
Belief belief_update(const Belief& belief, std::size_t action, const Observation& obs, const PomdpModel& model,
                     int stage);

struct AlphaVector {
    std::vector<double> values;
    std::size_t action = 0;
};

struct StagePolicy {
    std::vector<std::vector<AlphaVector>> stages;  // stages[k-1] for k = 1..H

    int horizon() const noexcept { return static_cast<int>(stages.size()); }
};

/// Action maximizing alpha . expand(belief) at stage k (1-based); ties go to
/// the lowest action index.
std::size_t act(const StagePolicy& policy, const Belief& belief, int stage);
double policy_value(const StagePolicy& policy, const Belief& belief, int stage);

struct PbviOptions {
    int belief_budget = 128;
    int expansion_depth = 2;
    bool exhaustive_observations = false;
    std::uint64_t seed = 0;
};

struct PbviResult {
    StagePolicy policy;
    double value = 0.0;  // V at the initial belief
    std::vector<std::size_t> belief_points;  // per stage
    std::vector<std::string> warnings;
};

PbviResult solve_pbvi(const PomdpModel& model, const PbviOptions& options = {});

/// Exhaustive action/observation tree search with joint Bayes filtering.
/// Refuses pools larger than 3 or horizons beyond 4.
double exact_expectimax(const PomdpModel& model);

/// Plain-text interchange dump (format described in docs/pomdp_format.md).
void write_model(std::ostream& os, const PomdpModel& model);

}  // namespace cfho
