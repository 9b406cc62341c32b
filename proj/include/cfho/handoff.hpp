#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cfho/channel.hpp"
#include "cfho/geometry.hpp"
#include "cfho/pomdp.hpp"
#include "cfho/rate.hpp"

namespace cfho {

enum class Scheme { pomdp_plain, pomdp_ho_min, lsf_time, lsf_threshold };

std::string to_string(Scheme s);
/// Throws ConfigError for unknown names.
Scheme parse_scheme(const std::string& name);

struct EngineConfig {
    int b_con = 5;
    int horizon = 10;
    double r_threshold = 7.0;  // nats/s/Hz
    double gamma = 0.95;
    Scheme scheme = Scheme::pomdp_ho_min;
    PbviOptions pbvi;
    /// Reuse the derived policy while the potential serving set is unchanged
    /// and the policy has not expired (HO-minimizing scheme only).
    bool ho_min_cache = false;
    MomentConvention convention = MomentConvention::scaled;

    void validate(std::size_t num_aps) const;
};

/// Static radio/propagation context of one trial.
struct SystemModel {
    NetworkLayout layout;
    PathLossParams path_loss;
    ShadowingParams shadowing;
    StateQuantizer quantizer;
    RadioParams radio;
    AgingProfile aging;
    double speed = 10.0;
    double step_duration = 1.0;
};

/// Ground truth of one trip: user positions for cycles 0..cycles+lookahead and
/// true LSF for cycles 0..cycles. Shared by every scheme run on the trial.
struct Trip {
    int cycles = 0;
    std::vector<Point2> positions;
    std::vector<std::vector<double>> lsf;
};

Trip generate_trip(const SystemModel& sys, int cycles, int lookahead, Rng& rng, Point2 start_offset = {});

struct HandoffDecision {
    int cycle = 0;
    std::vector<std::size_t> serving_set;  // ascending AP indices
    int n_ho = 0;
    bool triggered = false;
    double se = 0.0;  // nats/s/Hz at this cycle
};

/// Interferer-free spectral efficiency of a serving set at a trip cycle.
double serving_se(const SystemModel& sys, const Trip& trip, int cycle, const std::vector<std::size_t>& serving,
                  MomentConvention conv = MomentConvention::scaled);

/// The `k` APs with the largest gains, ties to the lowest index, ascending.
std::vector<std::size_t> top_k(const std::vector<double>& gains, int k);

/// Number of APs in `now` but not in `before`.
int count_handoffs(const std::vector<std::size_t>& before, const std::vector<std::size_t>& now);

/// Per-AP channel statistics along the known trajectory, computed on demand.
class TripStatistics {
public:
    TripStatistics(const SystemModel& sys, const Trip& trip);
    /// Marginal good probability and transition pair into `cycle` for every AP.
    const StageStats& at(int cycle);

private:
    const SystemModel& sys_;
    const Trip& trip_;
    std::vector<std::unique_ptr<StageStats>> cache_;
};

struct DerivedPolicy {
    StagePolicy policy;
    PomdpModel model;
    std::vector<std::size_t> pool;
    double value = 0.0;
    std::size_t best_subproblem = 0;
    std::size_t subproblems = 0;
    std::vector<double> subproblem_values;
};

struct PolicyContext {
    const SystemModel& sys;
    const Trip& trip;
    const EngineConfig& cfg;
    TripStatistics& stats;
    std::shared_ptr<const RewardTable> rewards;
    std::uint64_t seed = 0;
};

/// Divide-and-conquer policy derivation anchored at `anchor_cycle` (stage 0).
/// `observed` holds the quantized states known at the anchor; `prior` offers
/// beliefs for unobserved APs.
DerivedPolicy derive_policy(PolicyContext& ctx, int anchor_cycle, const std::vector<std::size_t>& base_set,
                            const std::map<std::size_t, ChannelState>& observed,
                            const std::map<std::size_t, double>& prior = {});

std::vector<HandoffDecision> run_pomdp_plain(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg,
                                             std::uint64_t seed);
std::vector<HandoffDecision> run_pomdp_ho_min(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg,
                                              std::uint64_t seed);
std::vector<HandoffDecision> run_lsf_time(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg);
std::vector<HandoffDecision> run_lsf_threshold(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg);

std::vector<HandoffDecision> run_scheme(const SystemModel& sys, const Trip& trip, const EngineConfig& cfg,
                                        std::uint64_t seed);

}  // namespace cfho
