#pragma once

#include <cstdint>
#include <vector>

#include "cfho/geometry.hpp"
#include "cfho/random.hpp"

namespace cfho {

struct PathLossParams {
    double d0 = 1.1;        // reference distance, m
    double alpha_pl = 3.8;  // exponent
    double d_h = 13.5;      // AP-user height difference, m

    void validate() const;
};

struct ShadowingParams {
    double sigma_sh_db = 6.0;
    double d_decorr = 100.0;  // m
    double iota = 0.5;        // weight of the AP-side component

    void validate() const;
};

/// Linear path-loss gain at planar distance `d_2d`.
double path_loss(double d_2d, const PathLossParams& p);

/// Jakes temporal correlation J0(2*pi*lag*f_D*T_s).
double jakes_rho(int lag, double f_doppler, double sample_period);

/// Correlation coefficients of the small-scale fading for lags 0..max_lag.
struct AgingProfile {
    double f_doppler = 0.0;
    double sample_period = 0.0;
    std::vector<double> rho;
    std::vector<double> rho_bar;

    static AgingProfile make(double f_doppler, double sample_period, int max_lag);
    /// rho == 1 at every lag.
    static AgingProfile static_user(int max_lag);
};

enum class ChannelState : std::uint8_t { bad = 0, good = 1 };

/// Two-level quantization of the large-scale fading.
struct StateQuantizer {
    double beta_threshold = 0.0;
    double beta_good = 0.0;
    double beta_bad = 0.0;
    int levels = 2;

    /// Levels taken as the path loss at three reference distances.
    static StateQuantizer from_distances(const PathLossParams& pl, double threshold_m, double good_m,
                                         double bad_m);
    double value(ChannelState s) const noexcept { return s == ChannelState::good ? beta_good : beta_bad; }
    void validate() const;
};

/// Ties at the threshold map to the bad state.
ChannelState quantize_state(double beta, const StateQuantizer& q);

/// Standard normal upper tail.
double q_function(double x);

/// Normalized threshold argument (10/sigma) log10(beta_threshold / PL(d)).
double threshold_argument(double d_2d, const StateQuantizer& q, const ShadowingParams& sh,
                          const PathLossParams& pl);

/// Marginal probability that the channel at planar distance `d_2d` is good.
double prob_good(double d_2d, const StateQuantizer& q, const ShadowingParams& sh, const PathLossParams& pl);

/// P(X > a, Y > b) for a standard bivariate normal pair with correlation `corr`.
double bvn_upper_rect(double a, double b, double corr);

/// Per-step correlation of the user-side shadowing component, 2^(-v*dt/d_decorr).
double step_correlation(const ShadowingParams& sh, double speed, double step_duration);

/// Correlation between consecutive total shadowing terms, iota + (1-iota)*c.
double shadowing_correlation(const ShadowingParams& sh, double speed, double step_duration);

struct TransitionPair {
    double p11 = 1.0;  // P(good at t | good at t-1)
    double p01 = 0.0;  // P(good at t | bad at t-1)

    friend bool operator==(const TransitionPair&, const TransitionPair&) = default;
};

/// Good-state transition probabilities between planar distances `d_prev`
/// and `d_curr` one step apart.
TransitionPair trans_probs(double d_prev, double d_curr, const StateQuantizer& q, const ShadowingParams& sh,
                           const PathLossParams& pl, double speed, double step_duration);

/// Ground-truth large-scale fading state for one trial.
struct LsfProcess {
    std::vector<double> kappa1;  // static AP-side field
    double kappa2 = 0.0;         // user-side process at the current cycle
    double step_corr = 1.0;
    std::vector<double> lsf;     // linear gains beta_b at the current cycle
};

LsfProcess init_lsf(const NetworkLayout& layout, const ShadowingParams& sh, const PathLossParams& pl,
                    const TrajectoryState& traj, Rng& rng);

/// Advances the user-side component by one cycle (first-order autoregression)
/// and recomputes the gains at the trajectory's current position.
LsfProcess step_lsf(const LsfProcess& proc, const NetworkLayout& layout, const ShadowingParams& sh,
                    const PathLossParams& pl, const TrajectoryState& traj, Rng& rng);

/// Shadowing-only recomputation of beta for the given kappa2 (used by both LSF ops).
std::vector<double> lsf_gains(const std::vector<double>& kappa1, double kappa2, const NetworkLayout& layout,
                              const ShadowingParams& sh, const PathLossParams& pl, Point2 position);

}  // namespace cfho
