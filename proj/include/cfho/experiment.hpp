#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfho/handoff.hpp"

namespace cfho {

enum class OverheadRule { linear, geometric };

struct ExperimentConfig {
    struct Network {
        int num_aps = 60;
        double area_side_m = 700.0;
        double ap_height_m = 15.0;
        double user_height_m = 1.5;
        double wrap_margin_m = 200.0;
        bool fixed_layout = false;  // same AP drop for every trial
    } network;
    struct Mobility {
        double speed_mps = 10.0;
        double step_duration_s = 1.0;
        int trip_cycles = 100;
        double start_offset_x_m = 0.0;
        double start_offset_y_m = 0.0;
    } mobility;
    struct Radio {
        double p_dl_dbm = 30.0;
        double p_ul_dbm = 20.0;
        double noise_density_dbm_hz = -174.0;
        double noise_figure_db = 8.0;
        double bandwidth_hz = 20e6;
        int antennas = 8;
        int tau_c = 200;
        int tau_p = 16;
        int pilot_index = 16;
        double carrier_hz = 1.8e9;
        double sample_period_s = 66.7e-6;
    } radio;
    struct Channel {
        double d0_m = 1.1;
        double alpha_pl = 3.8;
        double sigma_sh_db = 6.0;
        double d_decorr_m = 100.0;
        double iota = 0.5;
    } channel;
    struct Quantizer {
        double threshold_distance_m = 150.0;
        double good_distance_m = 50.0;
        double bad_distance_m = 200.0;
    } quantizer;
    struct Engine {
        std::vector<Scheme> schemes{Scheme::pomdp_ho_min};
        int b_con = 5;
        int horizon = 10;
        double r_threshold_nats = 7.0;
        double gamma = 0.95;
        int belief_budget = 128;
        int expansion_depth = 2;
        bool exhaustive_observations = false;
        bool ho_min_cache = false;
        MomentConvention convention = MomentConvention::scaled;
    } engine;
    struct Overhead {
        double delta = 0.0;
        OverheadRule rule = OverheadRule::linear;
    } overhead;
    struct Seeds {
        std::uint64_t master = 1;
        int trials = 50;
    } seeds;
    int workers = 1;
    std::string out_dir;

    /// Desk-scale profile (60 APs on 0.7 x 0.7 km^2).
    static ExperimentConfig desk();
    /// Full-scale profile (125 APs on 1 x 1 km^2).
    static ExperimentConfig table1();
    static ExperimentConfig profile(const std::string& name);

    void validate() const;

    SystemModel system_template() const;  // everything except the AP layout
    EngineConfig engine_config(Scheme scheme) const;
    RadioParams radio_params() const;
};

/// Noise power in watts from density (dBm/Hz), noise figure (dB) and bandwidth (Hz).
double noise_power(double density_dbm_hz, double figure_db, double bandwidth_hz);
double dbm_to_watt(double dbm);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep the values of `base`; unknown keys are configuration errors.
ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base = ExperimentConfig::desk());
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies `section.key=value`; the value is parsed as JSON when possible and
/// as a plain string otherwise.
void apply_override(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value);

double overhead_adjusted_se(double se, int n_ho, double delta, OverheadRule rule = OverheadRule::linear);

struct CycleRecord {
    int trial = 0;
    int t = 0;
    Scheme scheme = Scheme::pomdp_ho_min;
    std::vector<std::size_t> serving_set;
    double se = 0.0;
    int n_ho = 0;
    int cum_ho = 0;
    double se_adj = 0.0;
    bool triggered = false;
};

struct TrialSummary {
    int trial = 0;
    Scheme scheme = Scheme::pomdp_ho_min;
    int total_ho = 0;
    double se_p10 = 0.0;
    double se_mean = 0.0;
};

struct SimMetrics {
    std::vector<Scheme> schemes;
    std::vector<CycleRecord> records;  // ordered by trial, scheme, t
    std::vector<TrialSummary> trials;
};

/// Runs every configured scheme on every trial. Trials use seeds derived
/// from the master seed and are merged in trial order, so the result does not
/// depend on the worker count.
SimMetrics run_experiment(const ExperimentConfig& cfg);

/// Ground truth of one trial: its AP drop, trip and engine seed.
struct TrialSetup {
    SystemModel sys;
    Trip trip;
    std::uint64_t engine_seed = 0;
};

TrialSetup prepare_trial(const ExperimentConfig& cfg, int trial);

/// Policy derived for a trial at `cycle` from the serving set of the best
/// `b_con` true LSF values at that cycle.
DerivedPolicy derive_trial_policy(const ExperimentConfig& cfg, int trial, int cycle);

/// Per-trial computation, exposed for tests.
std::vector<CycleRecord> run_trial(const ExperimentConfig& cfg, int trial, std::vector<TrialSummary>* summaries);

/// Linear-interpolated quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double p);

nlohmann::json summarize(const SimMetrics& metrics, int trip_cycles);

/// Writes per_cycle.csv, summary.json and manifest.json into `out_dir`.
void export_metrics(const SimMetrics& metrics, const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Text of per_cycle.csv.
std::string per_cycle_csv(const SimMetrics& metrics);

}  // namespace cfho
