#include "cfho/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cfho/error.hpp"

namespace cfho {

void PathLossParams::validate() const {
    if (!(d0 > 0.0)) throw ConfigError("path loss reference distance must be positive");
    if (!(alpha_pl > 2.0)) throw ConfigError("path loss exponent must exceed 2");
    if (!(d_h >= 0.0)) throw ConfigError("height difference must be non-negative");
}

void ShadowingParams::validate() const {
    if (!(sigma_sh_db >= 0.0)) throw ConfigError("shadowing deviation must be non-negative");
    if (!(d_decorr > 0.0)) throw ConfigError("decorrelation distance must be positive");
    if (!(iota >= 0.0 && iota <= 1.0)) throw ConfigError("shadowing weight iota must lie in [0, 1]");
}

double path_loss(double d_2d, const PathLossParams& p) {
    if (d_2d < 0.0) throw ContractViolation("path_loss: negative distance");
    const double d3 = std::sqrt(d_2d * d_2d + p.d_h * p.d_h);
    return std::pow(p.d0 / d3, p.alpha_pl);
}

double jakes_rho(int lag, double f_doppler, double sample_period) {
    if (lag < 0) throw ContractViolation("jakes_rho: negative lag");
    const double x = 2.0 * std::numbers::pi * lag * f_doppler * sample_period;
    if (x == 0.0) return 1.0;
    return std::cyl_bessel_j(0.0, std::abs(x));
}

AgingProfile AgingProfile::make(double f_doppler, double sample_period, int max_lag) {
    if (max_lag < 0) throw ContractViolation("AgingProfile: negative lag range");
    AgingProfile a;
    a.f_doppler = f_doppler;
    a.sample_period = sample_period;
    a.rho.resize(static_cast<std::size_t>(max_lag) + 1);
    a.rho_bar.resize(a.rho.size());
    for (int k = 0; k <= max_lag; ++k) {
        const double r = jakes_rho(k, f_doppler, sample_period);
        a.rho[k] = r;
        a.rho_bar[k] = std::sqrt(std::max(0.0, 1.0 - r * r));
    }
    return a;
}

AgingProfile AgingProfile::static_user(int max_lag) { return make(0.0, 0.0, max_lag); }

StateQuantizer StateQuantizer::from_distances(const PathLossParams& pl, double threshold_m, double good_m,
                                              double bad_m) {
    StateQuantizer q;
    q.beta_threshold = path_loss(threshold_m, pl);
    q.beta_good = path_loss(good_m, pl);
    q.beta_bad = path_loss(bad_m, pl);
    q.levels = 2;
    q.validate();
    return q;
}

void StateQuantizer::validate() const {
    if (levels != 2) throw ConfigError("only two-level channel-state quantization is supported");
    if (!(beta_bad > 0.0 && beta_bad < beta_threshold && beta_threshold < beta_good)) {
        throw ConfigError("quantizer levels must satisfy 0 < bad < threshold < good");
    }
}

ChannelState quantize_state(double beta, const StateQuantizer& q) {
    if (!(beta > 0.0)) throw ContractViolation("quantize_state: gain must be positive");
    return beta > q.beta_threshold ? ChannelState::good : ChannelState::bad;
}

double threshold_argument(double d_2d, const StateQuantizer& q, const ShadowingParams& sh,
                          const PathLossParams& pl) {
    const double lg = std::log10(q.beta_threshold / path_loss(d_2d, pl));
    if (sh.sigma_sh_db == 0.0) {
        if (lg == 0.0) return std::numeric_limits<double>::infinity();  // tie is bad
        return lg > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return 10.0 / sh.sigma_sh_db * lg;
}

double prob_good(double d_2d, const StateQuantizer& q, const ShadowingParams& sh, const PathLossParams& pl) {
    return q_function(threshold_argument(d_2d, q, sh, pl));
}

double step_correlation(const ShadowingParams& sh, double speed, double step_duration) {
    return std::exp2(-speed * step_duration / sh.d_decorr);
}

double shadowing_correlation(const ShadowingParams& sh, double speed, double step_duration) {
    return sh.iota + (1.0 - sh.iota) * step_correlation(sh, speed, step_duration);
}

TransitionPair trans_probs(double d_prev, double d_curr, const StateQuantizer& q, const ShadowingParams& sh,
                           const PathLossParams& pl, double speed, double step_duration) {
    if (d_prev < 0.0 || d_curr < 0.0) throw ContractViolation("trans_probs: negative distance");
    constexpr double kMinMass = 1e-12;
    const double k_curr = threshold_argument(d_curr, q, sh, pl);
    const double k_prev = threshold_argument(d_prev, q, sh, pl);
    const double corr = std::clamp(shadowing_correlation(sh, speed, step_duration), -1.0, 1.0);
    const double marginal = q_function(k_curr);
    const double joint = bvn_upper_rect(k_curr, k_prev, corr);
    const double good_prev = q_function(k_prev);
    const double bad_prev = q_function(-k_prev);

    TransitionPair tp;
    tp.p11 = good_prev > kMinMass ? joint / good_prev : marginal;
    tp.p01 = bad_prev > kMinMass ? (marginal - joint) / bad_prev : marginal;
    tp.p11 = std::clamp(tp.p11, 0.0, 1.0);
    tp.p01 = std::clamp(tp.p01, 0.0, 1.0);
    return tp;
}

std::vector<double> lsf_gains(const std::vector<double>& kappa1, double kappa2, const NetworkLayout& layout,
                              const ShadowingParams& sh, const PathLossParams& pl, Point2 position) {
    std::vector<double> beta(layout.size());
    const double w1 = std::sqrt(sh.iota);
    const double w2 = std::sqrt(1.0 - sh.iota);
    for (std::size_t b = 0; b < layout.size(); ++b) {
        const double kbar = w1 * kappa1[b] + w2 * kappa2;
        beta[b] = path_loss(distance_2d(position, b, layout), pl) * std::pow(10.0, sh.sigma_sh_db * kbar / 10.0);
    }
    return beta;
}

namespace {

// Correlated standard-normal field over AP positions. APs sharing a position
// are factorized once so their draws coincide exactly.
std::vector<double> draw_ap_field(const NetworkLayout& layout, const ShadowingParams& sh, Rng& rng) {
    std::map<std::pair<double, double>, std::size_t> slot;
    std::vector<Point2> unique;
    std::vector<std::size_t> owner(layout.size());
    for (std::size_t b = 0; b < layout.size(); ++b) {
        const auto key = std::make_pair(layout.ap_positions[b].x, layout.ap_positions[b].y);
        auto [it, inserted] = slot.emplace(key, unique.size());
        if (inserted) unique.push_back(layout.ap_positions[b]);
        owner[b] = it->second;
    }

    const auto n = static_cast<Eigen::Index>(unique.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cov(i, j) = std::exp2(-euclidean(unique[i], unique[j]) / sh.d_decorr);
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    for (double jitter : {1e-12, 1e-11, 1e-10}) {
        if (llt.info() == Eigen::Success) break;
        llt.compute(cov + jitter * Eigen::MatrixXd::Identity(n, n));
    }
    if (llt.info() != Eigen::Success) throw NumericalError("AP shadowing covariance is not positive definite");

    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    const Eigen::VectorXd field = llt.matrixL() * z;

    std::vector<double> kappa1(layout.size());
    for (std::size_t b = 0; b < layout.size(); ++b) kappa1[b] = field(static_cast<Eigen::Index>(owner[b]));
    return kappa1;
}

}  // namespace

LsfProcess init_lsf(const NetworkLayout& layout, const ShadowingParams& sh, const PathLossParams& pl,
                    const TrajectoryState& traj, Rng& rng) {
    layout.validate();
    sh.validate();
    pl.validate();
    LsfProcess proc;
    proc.kappa1 = draw_ap_field(layout, sh, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    proc.kappa2 = normal(rng);
    proc.step_corr = step_correlation(sh, traj.speed, traj.step_duration);
    proc.lsf = lsf_gains(proc.kappa1, proc.kappa2, layout, sh, pl, traj.position);
    return proc;
}

LsfProcess step_lsf(const LsfProcess& proc, const NetworkLayout& layout, const ShadowingParams& sh,
                    const PathLossParams& pl, const TrajectoryState& traj, Rng& rng) {
    if (traj.cycle_index < 1) throw ContractViolation("step_lsf: cycle index must be at least 1");
    LsfProcess next = proc;
    std::normal_distribution<double> normal(0.0, 1.0);
    const double w = normal(rng);
    const double c = proc.step_corr;
    next.kappa2 = c * proc.kappa2 + std::sqrt(std::max(0.0, 1.0 - c * c)) * w;
    next.lsf = lsf_gains(next.kappa1, next.kappa2, layout, sh, pl, traj.position);
    return next;
}

}  // namespace cfho
