#include "cfho/rate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numeric>
#include <set>
#include <string>

#include "cfho/error.hpp"

namespace cfho {

namespace {

using cplx = std::complex<double>;

int lookup_load(const std::map<std::size_t, int>& loads, std::size_t b) {
    const auto it = loads.find(b);
    if (it == loads.end()) return 1;
    if (it->second < 1) throw ContractViolation("per-AP load must be at least 1");
    return it->second;
}

double lookup_gain(const std::map<std::size_t, double>& m, std::size_t b, const char* what) {
    const auto it = m.find(b);
    if (it == m.end()) throw ContractViolation(std::string(what) + " missing for AP " + std::to_string(b));
    return it->second;
}

void check_lags(const AgingProfile& aging, const RadioParams& radio, int max_lag) {
    const auto need = static_cast<std::size_t>(std::max(max_lag, radio.estimation_lag()));
    if (aging.rho.size() <= need || aging.rho_bar.size() != aging.rho.size()) {
        throw ContractViolation("aging profile does not cover the required lags");
    }
}

// Gains of the pilot-sharing interferers to AP b, leaving out interferer `skip`.
std::vector<double> sharer_gains(const InterfererPopulation& pop, std::size_t b, std::size_t skip) {
    std::vector<double> out;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        if (!pop[j].copilot || j == skip) continue;
        out.push_back(lookup_gain(pop[j].lsf_own, b, "pilot-sharer gain"));
    }
    return out;
}

constexpr std::size_t kTypical = static_cast<std::size_t>(-1);

// Lag-independent sums of the closed form.
struct RateSums {
    double s1 = 0.0;   // sum_b sqrt(psi_b / |E_b|)
    double s23 = 0.0;  // sum_b p_dl beta_b / |E_b|
    std::vector<double> nc;   // per interferer: sum_b' p_dl beta_b'u / |E_b'|
    std::vector<double> coh;  // per interferer: sum_b' sqrt(p_dl psi_b'u / |E_b'|), copilots only
};

RateSums rate_sums(const ServingConfig& serving, const InterfererPopulation& pop, const AgingProfile& aging,
                   const RadioParams& radio) {
    const double rho_e = aging.rho[static_cast<std::size_t>(radio.estimation_lag())];
    RateSums sums;
    for (std::size_t b : serving.serving_set) {
        const double beta = lookup_gain(serving.lsf, b, "serving gain");
        const double ps = psi(beta, rho_e, radio, sharer_gains(pop, b, kTypical));
        if (!(ps > 0.0)) continue;
        const int load = serving.load_of(b);
        sums.s1 += std::sqrt(ps / load);
        sums.s23 += radio.p_dl * beta / load;
    }
    sums.nc.assign(pop.size(), 0.0);
    sums.coh.assign(pop.size(), 0.0);
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const Interferer& it = pop[j];
        for (std::size_t b : it.serving_set) {
            const double beta_typ = lookup_gain(it.lsf_to_typical, b, "interferer-to-typical gain");
            const double beta_own = lookup_gain(it.lsf_own, b, "interferer own gain");
            std::vector<double> others;
            if (it.copilot) {
                others = sharer_gains(pop, b, j);
                others.push_back(beta_typ);
            }
            const double psi_own = psi(beta_own, rho_e, radio, others);
            if (!(psi_own > 0.0)) continue;
            const int load = it.load_of(b);
            sums.nc[j] += radio.p_dl * beta_typ / load;
            if (it.copilot) {
                std::vector<double> sharers = sharer_gains(pop, b, kTypical);
                const double psi_typ = psi(beta_typ, rho_e, radio, sharers);
                sums.coh[j] += std::sqrt(radio.p_dl * psi_typ / load);
            }
        }
    }
    return sums;
}

XiTerms xi_from_sums(const RateSums& s, const InterfererPopulation& pop, double rho_k, const RadioParams& radio,
                     MomentConvention conv) {
    const double M = radio.M;
    const double nc_scale = conv == MomentConvention::scaled ? M : 1.0;
    XiTerms xi;
    xi.xi1 = M * radio.p_dl * rho_k * rho_k * s.s1 * s.s1;
    xi.xi23 = nc_scale * s.s23;
    xi.xi4.resize(pop.size());
    for (std::size_t j = 0; j < pop.size(); ++j) {
        double v = nc_scale * s.nc[j];
        if (pop[j].copilot) v += M * rho_k * rho_k * s.coh[j] * s.coh[j];
        xi.xi4[j] = v;
    }
    return xi;
}

}  // namespace

void RadioParams::validate() const {
    if (!(p_dl > 0.0 && p_ul > 0.0 && noise_power > 0.0)) throw ConfigError("radio powers must be positive");
    if (M < 1) throw ConfigError("antenna count must be at least 1");
    if (!(tau_p >= 1 && tau_p < tau_c)) throw ConfigError("pilot length must satisfy 1 <= tau_p < tau_c");
    if (pilot_index < 1 || pilot_index > tau_p) throw ConfigError("pilot index must lie in [1, tau_p]");
}

int ServingConfig::load_of(std::size_t b) const { return lookup_load(loads, b); }
int Interferer::load_of(std::size_t b) const { return lookup_load(loads, b); }

double XiTerms::xi4_total() const { return std::accumulate(xi4.begin(), xi4.end(), 0.0); }

double psi(double beta, double rho_est, const RadioParams& radio, const std::vector<double>& copilot_betas) {
    if (!(beta > 0.0)) throw ContractViolation("psi: gain must be positive");
    double denom = radio.p_ul * beta + radio.noise_power;
    for (double c : copilot_betas) denom += radio.p_ul * c;
    return rho_est * rho_est * radio.p_ul * beta * beta / denom;
}

double psi_single_user(double state_value, double rho_est, const RadioParams& radio) {
    return rho_est * rho_est * radio.p_ul * state_value * state_value / radio.noise_power;
}

double eta(double psi_val, int M, int load, double p_dl) {
    if (!(psi_val > 0.0)) throw ContractViolation("eta: estimated-channel variance must be positive");
    if (load < 1) throw ContractViolation("eta: load must be at least 1");
    return p_dl / (static_cast<double>(M) * load * psi_val);
}

XiTerms xi_terms(const ServingConfig& serving, const InterfererPopulation& interferers, const AgingProfile& aging,
                 const RadioParams& radio, int lag, MomentConvention conv) {
    if (lag < 0) throw ContractViolation("xi_terms: negative lag");
    check_lags(aging, radio, lag);
    const RateSums sums = rate_sums(serving, interferers, aging, radio);
    return xi_from_sums(sums, interferers, aging.rho[static_cast<std::size_t>(lag)], radio, conv);
}

double rate_lb(const ServingConfig& serving, const InterfererPopulation& interferers, const AgingProfile& aging,
               const RadioParams& radio, MomentConvention conv) {
    if (serving.serving_set.empty()) return 0.0;
    const int lags = radio.data_samples();
    check_lags(aging, radio, lags - 1);
    const RateSums sums = rate_sums(serving, interferers, aging, radio);
    double total = 0.0;
    for (int k = 0; k < lags; ++k) {
        const XiTerms xi = xi_from_sums(sums, interferers, aging.rho[static_cast<std::size_t>(k)], radio, conv);
        total += std::log1p(xi.xi1 / (xi.xi23 + xi.xi4_total() + radio.noise_power));
    }
    return total / radio.tau_c;
}

double single_user_se(const std::vector<double>& gains, const std::vector<int>& loads, const AgingProfile& aging,
                      const RadioParams& radio, MomentConvention conv) {
    if (gains.size() != loads.size()) throw ContractViolation("single_user_se: gains and loads differ in length");
    if (gains.empty()) return 0.0;
    const int lags = radio.data_samples();
    check_lags(aging, radio, lags - 1);
    const double rho_e = aging.rho[static_cast<std::size_t>(radio.estimation_lag())];
    double s1 = 0.0;
    double s23 = 0.0;
    for (std::size_t j = 0; j < gains.size(); ++j) {
        if (loads[j] < 1) throw ContractViolation("per-AP load must be at least 1");
        const double ps = psi_single_user(gains[j], rho_e, radio);
        if (!(ps > 0.0)) continue;
        s1 += std::sqrt(ps / loads[j]);
        s23 += radio.p_dl * gains[j] / loads[j];
    }
    const double xi23 = (conv == MomentConvention::scaled ? radio.M : 1.0) * s23;
    const double coherent = radio.M * radio.p_dl * s1 * s1;
    double total = 0.0;
    for (int k = 0; k < lags; ++k) {
        const double r = aging.rho[static_cast<std::size_t>(k)];
        total += std::log1p(coherent * r * r / (xi23 + radio.noise_power));
    }
    return total / radio.tau_c;
}

double reward(std::uint32_t state_bits, std::uint32_t action_bits, std::size_t pool_size, int b_con,
              const std::vector<int>& loads, const AgingProfile& aging, const RadioParams& radio,
              const StateQuantizer& q, MomentConvention conv) {
    if (pool_size == 0 || pool_size > 31) throw ContractViolation("reward: unsupported pool size");
    const std::uint32_t mask = (std::uint32_t{1} << pool_size) - 1;
    if ((action_bits & ~mask) != 0 || std::popcount(action_bits) != b_con) {
        throw ContractViolation("reward: action must select exactly B_con pool APs");
    }
    if (loads.size() != pool_size) throw ContractViolation("reward: one load per pool AP required");
    std::vector<double> gains;
    std::vector<int> sel_loads;
    for (std::size_t j = 0; j < pool_size; ++j) {
        if (!((action_bits >> j) & 1U)) continue;
        gains.push_back(((state_bits >> j) & 1U) ? q.beta_good : q.beta_bad);
        sel_loads.push_back(loads[j]);
    }
    return single_user_se(gains, sel_loads, aging, radio, conv);
}

namespace {

class ComplexNormal {
public:
    explicit ComplexNormal(Rng& rng) : rng_(rng) {}
    cplx operator()(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = n_(rng_);
        const double im = n_(rng_);
        return {s * re, s * im};
    }

private:
    Rng& rng_;
    std::normal_distribution<double> n_{0.0, 1.0};
};

PowerEstimate mean_abs2(const std::vector<cplx>& samples, cplx center) {
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const cplx& x : samples) {
        const double v = std::norm(x - center);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, std::sqrt(var / std::max(1.0, n - 1.0))};
}

}  // namespace

SignalPowers mc_signal_oracle(const ServingConfig& serving, const InterfererPopulation& pop, const AgingProfile& aging,
                              const RadioParams& radio, int lag, int n_realizations, std::uint64_t seed) {
    if (n_realizations < 1) throw ContractViolation("mc_signal_oracle: realization count must be positive");
    if (lag < 0) throw ContractViolation("mc_signal_oracle: negative lag");
    radio.validate();
    check_lags(aging, radio, lag);

    const int M = radio.M;
    const double rho_e = aging.rho[static_cast<std::size_t>(radio.estimation_lag())];
    const double rho_bar_e = aging.rho_bar[static_cast<std::size_t>(radio.estimation_lag())];
    const double rho_k = aging.rho[static_cast<std::size_t>(lag)];
    const double rho_bar_k = aging.rho_bar[static_cast<std::size_t>(lag)];
    const double sqrt_pu = std::sqrt(radio.p_ul);

    // Every AP touched by the typical user or an interferer, with the typical
    // user's gain to it.
    std::set<std::size_t> ap_set(serving.serving_set.begin(), serving.serving_set.end());
    for (const auto& it : pop) ap_set.insert(it.serving_set.begin(), it.serving_set.end());
    const std::vector<std::size_t> aps(ap_set.begin(), ap_set.end());
    const std::size_t n_ap = aps.size();
    auto slot_of = [&](std::size_t b) {
        return static_cast<std::size_t>(std::lower_bound(aps.begin(), aps.end(), b) - aps.begin());
    };
    std::vector<double> beta_typ(n_ap, 0.0);
    for (std::size_t s = 0; s < n_ap; ++s) {
        const std::size_t b = aps[s];
        if (serving.lsf.count(b)) {
            beta_typ[s] = serving.lsf.at(b);
            continue;
        }
        for (const auto& it : pop) {
            if (it.lsf_to_typical.count(b)) {
                beta_typ[s] = it.lsf_to_typical.at(b);
                break;
            }
        }
        if (!(beta_typ[s] > 0.0)) throw ContractViolation("typical-user gain missing for AP " + std::to_string(b));
    }

    std::vector<std::size_t> copilots;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        if (pop[j].copilot) copilots.push_back(j);
    }
    // Pilot-sharer gains per AP slot (only at APs where estimates are formed
    // from the shared pilot: typical serving APs and copilot serving APs).
    std::vector<std::vector<double>> sharer_beta(n_ap, std::vector<double>(copilots.size(), 0.0));
    std::vector<double> pilot_denom(n_ap, 0.0);
    std::vector<bool> needs_pilot(n_ap, false);
    for (std::size_t b : serving.serving_set) needs_pilot[slot_of(b)] = true;
    for (std::size_t c : copilots) {
        for (std::size_t b : pop[c].serving_set) needs_pilot[slot_of(b)] = true;
    }
    for (std::size_t s = 0; s < n_ap; ++s) {
        if (!needs_pilot[s]) continue;
        double d = radio.p_ul * beta_typ[s] + radio.noise_power;
        for (std::size_t ci = 0; ci < copilots.size(); ++ci) {
            sharer_beta[s][ci] = lookup_gain(pop[copilots[ci]].lsf_own, aps[s], "pilot-sharer gain");
            d += radio.p_ul * sharer_beta[s][ci];
        }
        pilot_denom[s] = d;
    }

    struct Link {
        std::size_t slot;
        double sqrt_eta;
        double est_coeff;  // LMMSE coefficient applied to the pilot observation
        double own_psi;    // only for non-pilot-sharing interferers
        int load;
    };
    std::vector<Link> typ_links;
    for (std::size_t b : serving.serving_set) {
        const std::size_t s = slot_of(b);
        const double ps = rho_e * rho_e * radio.p_ul * beta_typ[s] * beta_typ[s] / pilot_denom[s];
        if (!(ps > 0.0)) continue;
        const int load = serving.load_of(b);
        typ_links.push_back({s, std::sqrt(eta(ps, M, load, radio.p_dl)),
                             rho_e * sqrt_pu * beta_typ[s] / pilot_denom[s], ps, load});
    }
    std::vector<std::vector<Link>> int_links(pop.size());
    for (std::size_t j = 0; j < pop.size(); ++j) {
        for (std::size_t b : pop[j].serving_set) {
            const std::size_t s = slot_of(b);
            const double own = lookup_gain(pop[j].lsf_own, b, "interferer own gain");
            const int load = pop[j].load_of(b);
            double ps = 0.0;
            double coeff = 0.0;
            if (pop[j].copilot) {
                ps = rho_e * rho_e * radio.p_ul * own * own / pilot_denom[s];
                coeff = rho_e * sqrt_pu * own / pilot_denom[s];
            } else {
                ps = psi(own, rho_e, radio);
            }
            if (!(ps > 0.0)) continue;
            int_links[j].push_back({s, std::sqrt(eta(ps, M, load, radio.p_dl)), coeff, ps, load});
        }
    }
    const auto n = static_cast<std::size_t>(n_realizations);
    std::vector<cplx> x_samples(n), ca_samples(n);
    std::vector<std::vector<cplx>> mi_samples(pop.size(), std::vector<cplx>(n));
    std::vector<double> tx_sum(typ_links.size(), 0.0);

    const std::size_t nm = static_cast<std::size_t>(M);
    std::vector<cplx> h(n_ap * nm), w(n_ap * nm), y(n_ap * nm);
    std::vector<cplx> hhat(nm);

    constexpr std::size_t kChunk = 10000;
    for (std::size_t start = 0; start < n; start += kChunk) {
        Rng rng = make_rng(derive_seed(seed, start / kChunk));
        ComplexNormal cn(rng);
        const std::size_t stop = std::min(n, start + kChunk);
        for (std::size_t r = start; r < stop; ++r) {
            // Channels at the estimation instant, data-time innovations and
            // pilot observations.
            for (std::size_t s = 0; s < n_ap; ++s) {
                for (std::size_t m = 0; m < nm; ++m) {
                    const std::size_t i = s * nm + m;
                    h[i] = cn(beta_typ[s]);
                    w[i] = cn(beta_typ[s]);
                    if (!needs_pilot[s]) continue;
                    cplx obs = sqrt_pu * (rho_e * h[i] + rho_bar_e * cn(beta_typ[s]));
                    for (double sb : sharer_beta[s]) obs += sqrt_pu * cn(sb);
                    obs += cn(radio.noise_power);
                    y[i] = obs;
                }
            }

            cplx x{0.0, 0.0};
            cplx ca{0.0, 0.0};
            for (std::size_t l = 0; l < typ_links.size(); ++l) {
                const Link& lk = typ_links[l];
                cplx inner{0.0, 0.0};
                cplx aged{0.0, 0.0};
                double norm2 = 0.0;
                for (std::size_t m = 0; m < nm; ++m) {
                    const cplx est = lk.est_coeff * y[lk.slot * nm + m];
                    inner += h[lk.slot * nm + m] * std::conj(est);
                    aged += w[lk.slot * nm + m] * std::conj(est);
                    norm2 += std::norm(est);
                }
                x += lk.sqrt_eta * inner;
                ca += rho_bar_k * lk.sqrt_eta * aged;
                tx_sum[l] += lk.sqrt_eta * lk.sqrt_eta * norm2 * lk.load;
            }
            x_samples[r] = x;
            ca_samples[r] = ca;

            for (std::size_t j = 0; j < pop.size(); ++j) {
                cplx mi{0.0, 0.0};
                for (const Link& lk : int_links[j]) {
                    cplx inner{0.0, 0.0};
                    for (std::size_t m = 0; m < nm; ++m) {
                        const std::size_t i = lk.slot * nm + m;
                        cplx est;
                        if (pop[j].copilot) {
                            est = lk.est_coeff * y[i];
                        } else {
                            est = cn(lk.own_psi);
                        }
                        const cplx h_data = rho_k * h[i] + rho_bar_k * w[i];
                        inner += h_data * std::conj(est);
                    }
                    mi += lk.sqrt_eta * inner;
                }
                mi_samples[j][r] = mi;
            }
        }
    }
    cplx mean_x{0.0, 0.0};
    for (const cplx& v : x_samples) mean_x += v;
    mean_x /= static_cast<double>(n);

    SignalPowers out;
    const PowerEstimate var_x = mean_abs2(x_samples, mean_x);
    const double se_mean = std::sqrt(var_x.mean / static_cast<double>(n));
    out.ds.mean = rho_k * rho_k * std::norm(mean_x);
    out.ds.std_error = 2.0 * rho_k * rho_k * std::abs(mean_x) * se_mean;
    out.bu = {rho_k * rho_k * var_x.mean, rho_k * rho_k * var_x.std_error};
    out.ca = mean_abs2(ca_samples, {0.0, 0.0});
    std::vector<cplx> combined(n);
    for (std::size_t r = 0; r < n; ++r) combined[r] = rho_k * (x_samples[r] - mean_x) + ca_samples[r];
    out.bu_ca = mean_abs2(combined, {0.0, 0.0});
    out.mi.reserve(pop.size());
    for (const auto& s : mi_samples) out.mi.push_back(mean_abs2(s, {0.0, 0.0}));
    for (double t : tx_sum) out.max_tx_power_ratio = std::max(out.max_tx_power_ratio, t / static_cast<double>(n) / radio.p_dl);
    return out;
}

}  // namespace cfho
