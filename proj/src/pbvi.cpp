// Finite-horizon point-based value iteration.
//
// Beliefs in this model stay in product form, and connected APs are observed
// exactly while unconnected observations carry no state information. For a
// belief b and action a with connected mask C, the best successor alpha vector
// for an observation o on C therefore depends only on the unconnected factors
// of b: the connected factors scale every candidate equally. The backup picks,
// per (action, unconnected factors), one successor index per observation and
// assembles the new alpha vector state by state.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>

#include "cfho/error.hpp"
#include "cfho/pomdp.hpp"
#include "cfho/random.hpp"

namespace cfho {

namespace {

double l1(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

constexpr std::size_t kNotCorner = static_cast<std::size_t>(-1);

struct PointSet {
    std::vector<Belief> factors;
    std::vector<std::vector<double>> joint;
    std::vector<std::size_t> corner;  // state index of a corner belief, kNotCorner otherwise
};

// Index of the state holding all the mass of a factorized belief, if any.
std::size_t corner_of(const Belief& b) {
    std::size_t s = 0;
    for (std::size_t j = 0; j < b.upsilon.size(); ++j) {
        if (b.upsilon[j] == 1.0) {
            s |= std::size_t{1} << j;
        } else if (b.upsilon[j] != 0.0) {
            return kNotCorner;
        }
    }
    return s;
}

// L1 distance between joint beliefs; against a corner e_s it reduces to
// 2 (1 - b(s)).
double belief_distance(const std::vector<double>& a, std::size_t corner_a, const std::vector<double>& b,
                       std::size_t corner_b) {
    if (corner_a != kNotCorner) return 2.0 * (1.0 - b[corner_a]);
    if (corner_b != kNotCorner) return 2.0 * (1.0 - a[corner_b]);
    return l1(a, b);
}

// Product-form transition applied to an alpha vector:
// out(s) = sum_s' P(s' | s) alpha(s').
std::vector<double> propagate(const std::vector<double>& alpha, const StageStats& st) {
    std::vector<double> v = alpha;
    const std::size_t n = st.trans.size();
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        const double p01 = st.trans[j].p01;
        const double p11 = st.trans[j].p11;
        for (std::size_t s = 0; s < v.size(); ++s) {
            if (s & bit) continue;
            const double v0 = v[s];
            const double v1 = v[s | bit];
            v[s] = (1.0 - p01) * v0 + p01 * v1;
            v[s | bit] = (1.0 - p11) * v0 + p11 * v1;
        }
    }
    return v;
}

struct VecHash {
    std::size_t operator()(const AlphaVector& a) const noexcept {
        std::uint64_t h = 1469598103934665603ULL ^ a.action;
        for (double x : a.values) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &x, sizeof bits);
            h = (h ^ bits) * 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

struct VecEq {
    bool operator()(const AlphaVector& a, const AlphaVector& b) const noexcept {
        return a.action == b.action && a.values == b.values;
    }
};

Observation sample_observation(const Belief& b, std::uint32_t mask, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Observation o{mask, 0};
    for (std::size_t j = 0; j < b.upsilon.size(); ++j) {
        if (!((mask >> j) & 1U)) continue;
        if (u(rng) < b.upsilon[j]) o.bits |= std::uint32_t{1} << j;
    }
    return o;
}

std::vector<Observation> all_observations(const Belief& b, std::uint32_t mask) {
    std::vector<Observation> out;
    // Enumerate the subsets of the mask.
    std::uint32_t sub = 0;
    while (true) {
        double p = 1.0;
        for (std::size_t j = 0; j < b.upsilon.size(); ++j) {
            if (!((mask >> j) & 1U)) continue;
            p *= ((sub >> j) & 1U) ? b.upsilon[j] : 1.0 - b.upsilon[j];
        }
        if (p > 0.0) out.push_back({mask, sub});
        if (sub == mask) break;
        sub = (sub - mask) & mask;
    }
    return out;
}

// Greedy farthest-point thinning of `candidates` into `points` until the
// budget is reached.
void add_farthest(PointSet& points, const std::vector<Belief>& candidates, std::size_t budget) {
    std::vector<std::vector<double>> cj;
    std::vector<std::size_t> cc;
    cj.reserve(candidates.size());
    cc.reserve(candidates.size());
    for (const auto& c : candidates) {
        cj.push_back(expand_belief(c));
        cc.push_back(corner_of(c));
    }
    constexpr double kSame = 1e-12;
    std::vector<double> dist(candidates.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (std::size_t p = 0; p < points.joint.size(); ++p) {
            dist[i] = std::min(dist[i], belief_distance(cj[i], cc[i], points.joint[p], points.corner[p]));
        }
    }
    while (points.joint.size() < budget) {
        std::size_t pick = candidates.size();
        double far = kSame;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (dist[i] > far) {
                far = dist[i];
                pick = i;
            }
        }
        if (pick == candidates.size()) break;
        points.factors.push_back(candidates[pick]);
        points.joint.push_back(cj[pick]);
        points.corner.push_back(cc[pick]);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            dist[i] = std::min(dist[i], belief_distance(cj[i], cc[i], cj[pick], cc[pick]));
        }
    }
}

}  // namespace

PbviResult solve_pbvi(const PomdpModel& model, const PbviOptions& options) {
    model.validate();
    if (options.belief_budget < 1) throw ContractViolation("belief budget must be positive");
    if (options.expansion_depth < 0) throw ContractViolation("expansion depth must be non-negative");

    const std::size_t n = model.pool_size();
    const std::size_t ns = model.num_states();
    const std::size_t na = model.num_actions();
    const int H = model.horizon;
    const auto budget = static_cast<std::size_t>(options.belief_budget);
    Rng rng = make_rng(options.seed);
    PbviResult result;

    const Belief b1 = predict(model.initial_belief, model.stages[1]);

    // Corner beliefs, subsampled when they exceed the budget.
    std::vector<std::size_t> corner_ids(ns);
    for (std::size_t s = 0; s < ns; ++s) corner_ids[s] = s;
    if (ns + 1 > budget) {
        std::shuffle(corner_ids.begin(), corner_ids.end(), rng);
        corner_ids.resize(budget > 1 ? budget - 1 : 0);
        std::sort(corner_ids.begin(), corner_ids.end());
        result.warnings.push_back("belief budget " + std::to_string(budget) + " below corner count " +
                                  std::to_string(ns) + "; corner set subsampled");
    }
    PointSet corners;
    for (std::size_t s : corner_ids) {
        Belief c;
        c.upsilon.resize(n);
        for (std::size_t j = 0; j < n; ++j) c.upsilon[j] = ((s >> j) & 1U) ? 1.0 : 0.0;
        corners.factors.push_back(std::move(c));
    }

    // Reachable beliefs per stage.
    std::vector<std::vector<Belief>> reach(static_cast<std::size_t>(H) + 1);
    reach[1] = {b1};
    for (int k = 1; k < H; ++k) {
        auto& next = reach[static_cast<std::size_t>(k) + 1];
        if (k > options.expansion_depth) {
            next = reach[static_cast<std::size_t>(k)];
            continue;
        }
        for (const Belief& b : reach[static_cast<std::size_t>(k)]) {
            for (std::size_t a = 0; a < na; ++a) {
                const std::uint32_t mask = model.actions[a];
                if (options.exhaustive_observations) {
                    for (const Observation& o : all_observations(b, mask)) {
                        next.push_back(belief_update(b, a, o, model, k + 1));
                    }
                } else {
                    next.push_back(belief_update(b, a, sample_observation(b, mask, rng), model, k + 1));
                }
            }
        }
    }

    std::vector<PointSet> points(static_cast<std::size_t>(H) + 1);
    for (int k = 1; k <= H; ++k) {
        PointSet& ps = points[static_cast<std::size_t>(k)];
        if (k == 1) {
            ps.factors.push_back(b1);
            ps.joint.push_back(expand_belief(b1));
            ps.corner.push_back(corner_of(b1));
        }
        add_farthest(ps, corners.factors, ps.joint.size() + corners.factors.size());
        add_farthest(ps, reach[static_cast<std::size_t>(k)], budget);
        result.belief_points.push_back(ps.joint.size());
    }

    // Backward induction.
    std::vector<std::vector<AlphaVector>> stages(static_cast<std::size_t>(H));
    std::vector<std::vector<double>> propagated;  // successor alphas pushed through next-stage transitions
    for (int k = H; k >= 1; --k) {
        const PointSet& ps = points[static_cast<std::size_t>(k)];
        const bool terminal = (k == H);
        std::map<std::pair<std::size_t, std::vector<double>>, std::vector<std::uint32_t>> memo;

        std::unordered_set<AlphaVector, VecHash, VecEq> seen;
        std::vector<AlphaVector> gamma;
        std::vector<double> alpha(ns);
        for (std::size_t p = 0; p < ps.joint.size(); ++p) {
            const Belief& b = ps.factors[p];
            const std::vector<double>& w = ps.joint[p];
            AlphaVector best;
            double best_val = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < na; ++a) {
                const std::uint32_t mask = model.actions[a];
                if (terminal) {
                    for (std::size_t s = 0; s < ns; ++s) alpha[s] = model.reward(s, a);
                } else {
                    std::vector<double> hidden;
                    for (std::size_t j = 0; j < n; ++j) {
                        if (!((mask >> j) & 1U)) hidden.push_back(b.upsilon[j]);
                    }
                    auto key = std::make_pair(a, hidden);
                    auto it = memo.find(key);
                    if (it == memo.end()) {
                        // weight of each full state given its observed part
                        std::vector<double> wu(ns, 1.0);
                        for (std::size_t s = 0; s < ns; ++s) {
                            double q = 1.0;
                            for (std::size_t j = 0; j < n; ++j) {
                                if ((mask >> j) & 1U) continue;
                                q *= ((s >> j) & 1U) ? b.upsilon[j] : 1.0 - b.upsilon[j];
                            }
                            wu[s] = q;
                        }
                        std::vector<std::uint32_t> choice(ns, 0);
                        std::vector<double> top(ns, -std::numeric_limits<double>::infinity());
                        std::vector<double> score(ns);
                        for (std::size_t j = 0; j < propagated.size(); ++j) {
                            std::fill(score.begin(), score.end(), 0.0);
                            const auto& ta = propagated[j];
                            for (std::size_t s = 0; s < ns; ++s) score[s & mask] += wu[s] * ta[s];
                            for (std::size_t o = 0; o < ns; ++o) {
                                if ((o & ~static_cast<std::size_t>(mask)) != 0) continue;
                                if (score[o] > top[o]) {
                                    top[o] = score[o];
                                    choice[o] = static_cast<std::uint32_t>(j);
                                }
                            }
                        }
                        it = memo.emplace(std::move(key), std::move(choice)).first;
                    }
                    const auto& choice = it->second;
                    for (std::size_t s = 0; s < ns; ++s) {
                        alpha[s] = model.reward(s, a) + model.discount * propagated[choice[s & mask]][s];
                    }
                }
                double v = 0.0;
                for (std::size_t s = 0; s < ns; ++s) v += alpha[s] * w[s];
                if (a == 0 || v > best_val + 1e-12 * std::max(1.0, std::abs(best_val))) {
                    best_val = v;
                    best.values = alpha;
                    best.action = a;
                }
            }
            if (seen.insert(best).second) gamma.push_back(std::move(best));
        }

        propagated.clear();
        if (k > 1) {
            const StageStats& st = model.stages[static_cast<std::size_t>(k)];
            propagated.reserve(gamma.size());
            for (const auto& g : gamma) propagated.push_back(propagate(g.values, st));
        }
        stages[static_cast<std::size_t>(k) - 1] = std::move(gamma);
    }

    result.policy.stages = std::move(stages);
    result.value = policy_value(result.policy, b1, 1);
    return result;
}

}  // namespace cfho
