#include <algorithm>
#include <vector>

#include "cfho/error.hpp"
#include "cfho/pomdp.hpp"

namespace cfho {

namespace {

using Matrix = std::vector<std::vector<double>>;

class TreeSearch {
public:
    explicit TreeSearch(const PomdpModel& m) : m_(m), ns_(m.num_states()) {
        trans_.resize(static_cast<std::size_t>(m.horizon) + 1);
        for (int k = 1; k <= m.horizon; ++k) {
            Matrix t(ns_, std::vector<double>(ns_));
            for (std::size_t s = 0; s < ns_; ++s) {
                for (std::size_t s2 = 0; s2 < ns_; ++s2) t[s][s2] = m.transition(k, s, s2);
            }
            trans_[static_cast<std::size_t>(k)] = std::move(t);
        }
    }

    std::vector<double> push(const std::vector<double>& belief, int stage) const {
        std::vector<double> out(ns_, 0.0);
        const Matrix& t = trans_[static_cast<std::size_t>(stage)];
        for (std::size_t s = 0; s < ns_; ++s) {
            if (belief[s] == 0.0) continue;
            for (std::size_t s2 = 0; s2 < ns_; ++s2) out[s2] += belief[s] * t[s][s2];
        }
        return out;
    }

    // Optimal value of a joint belief over the states of `stage`.
    double value(const std::vector<double>& belief, int stage) const {
        if (stage > m_.horizon) return 0.0;
        double best = 0.0;
        bool first = true;
        for (std::size_t a = 0; a < m_.num_actions(); ++a) {
            double v = 0.0;
            for (std::size_t s = 0; s < ns_; ++s) v += belief[s] * m_.reward(s, a);
            if (stage < m_.horizon) {
                double future = 0.0;
                for (std::size_t o = 0; o < m_.num_observations(); ++o) {
                    std::vector<double> post(ns_, 0.0);
                    double p_obs = 0.0;
                    for (std::size_t s = 0; s < ns_; ++s) {
                        const double p = belief[s] * m_.observation_prob(stage, a, s, o);
                        post[s] = p;
                        p_obs += p;
                    }
                    if (p_obs <= 0.0) continue;
                    for (double& p : post) p /= p_obs;
                    future += p_obs * value(push(post, stage + 1), stage + 1);
                }
                v += m_.discount * future;
            }
            if (first || v > best) best = v;
            first = false;
        }
        return best;
    }

private:
    const PomdpModel& m_;
    std::size_t ns_;
    std::vector<Matrix> trans_;
};

}  // namespace

double exact_expectimax(const PomdpModel& model) {
    model.validate();
    if (model.pool_size() > 3) throw ContractViolation("exact_expectimax: pool larger than 3 APs");
    if (model.horizon > 4) throw ContractViolation("exact_expectimax: horizon beyond 4");
    TreeSearch search(model);
    const auto b0 = expand_belief(model.initial_belief);
    return search.value(search.push(b0, 1), 1);
}

}  // namespace cfho
