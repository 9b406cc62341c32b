#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "cfho/channel.hpp"
#include "cfho/random.hpp"

namespace cfho {

struct RadioParams {
    double p_dl = 1.0;                 // W
    double p_ul = 0.1;                 // W
    double noise_power = 5.0238e-13;   // W
    int M = 8;                         // antennas per AP
    int tau_c = 200;                   // samples per frame
    int tau_p = 16;                    // pilot samples
    int pilot_index = 16;              // typical user's pilot slot, 1..tau_p

    int n_est() const noexcept { return tau_p + 1; }
    /// Samples between the pilot and the estimation instant.
    int estimation_lag() const noexcept { return n_est() - pilot_index; }
    /// Number of data samples n_est..tau_c.
    int data_samples() const noexcept { return tau_c - n_est() + 1; }
    void validate() const;
};

/// How the non-coherent power terms are evaluated.
///
/// `scaled` keeps a leading factor M on the beamforming-uncertainty, aging and
/// non-coherent interference powers. `exact` uses the complex-Gaussian
/// moments of the conjugate-beamforming signal model, which is what a
/// link-level simulation of that model measures.
enum class MomentConvention { scaled, exact };

struct ServingConfig {
    std::vector<std::size_t> serving_set;
    std::map<std::size_t, double> lsf;   // beta_bu for each serving AP
    std::map<std::size_t, int> loads;    // |E_b|; missing entries count as 1

    int load_of(std::size_t b) const;
};

struct Interferer {
    std::vector<std::size_t> serving_set;
    std::map<std::size_t, double> lsf_to_typical;  // beta_{b'u}, covers serving_set
    /// beta_{b'u'}: gains from this user to APs. Must cover its own serving
    /// set; for pilot-sharing users it must also cover every AP whose
    /// estimate it contaminates (the typical user's and other sharers' APs).
    std::map<std::size_t, double> lsf_own;
    std::map<std::size_t, int> loads;
    bool copilot = false;

    int load_of(std::size_t b) const;
};

using InterfererPopulation = std::vector<Interferer>;

/// Estimated-channel variance psi. `copilot_betas` lists the gains of the
/// other pilot-sharing users to the same AP.
double psi(double beta, double rho_est, const RadioParams& radio, const std::vector<double>& copilot_betas = {});

/// Single-user estimated-channel variance from a quantized state value.
double psi_single_user(double state_value, double rho_est, const RadioParams& radio);

/// Conjugate-beamforming power coefficient. Requires psi_val > 0.
double eta(double psi_val, int M, int load, double p_dl);

/// Closed-form power terms at one data-sample lag.
struct XiTerms {
    double xi1 = 0.0;
    double xi23 = 0.0;
    std::vector<double> xi4;  // one per interferer

    double xi4_total() const;
};

XiTerms xi_terms(const ServingConfig& serving, const InterfererPopulation& interferers, const AgingProfile& aging,
                 const RadioParams& radio, int lag, MomentConvention conv = MomentConvention::scaled);

/// Achievable-rate lower bound in nats/s/Hz.
double rate_lb(const ServingConfig& serving, const InterfererPopulation& interferers, const AgingProfile& aging,
               const RadioParams& radio, MomentConvention conv = MomentConvention::scaled);

/// Interferer-free spectral efficiency with the single-user estimation
/// variance computed from `gains` (one per selected AP).
double single_user_se(const std::vector<double>& gains, const std::vector<int>& loads, const AgingProfile& aging,
                      const RadioParams& radio, MomentConvention conv = MomentConvention::scaled);

/// POMDP reward: pool channel states and selection mask are bit vectors
/// (bit j refers to pool position j).
double reward(std::uint32_t state_bits, std::uint32_t action_bits, std::size_t pool_size, int b_con,
              const std::vector<int>& loads, const AgingProfile& aging, const RadioParams& radio,
              const StateQuantizer& q, MomentConvention conv = MomentConvention::scaled);

struct PowerEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct SignalPowers {
    PowerEstimate ds;     // |E{DS}|^2
    PowerEstimate bu;     // E|BU|^2
    PowerEstimate ca;     // E|CA|^2
    PowerEstimate bu_ca;  // E|BU + CA|^2
    std::vector<PowerEstimate> mi;  // E|MI_uu'|^2 per interferer
    /// Largest empirical E||x_b||^2 / p_dl over the typical user's serving APs,
    /// counting |E_b| equally loaded users.
    double max_tx_power_ratio = 0.0;
};

/// Direct simulation of pilot transmission, LMMSE estimation, aging and
/// conjugate-beamformed downlink at the given data-sample lag.
SignalPowers mc_signal_oracle(const ServingConfig& serving, const InterfererPopulation& interferers,
                              const AgingProfile& aging, const RadioParams& radio, int lag, int n_realizations,
                              std::uint64_t seed);

}  // namespace cfho
