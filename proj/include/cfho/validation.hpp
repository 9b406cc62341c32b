#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cfho {

struct ValidationOptions {
    int rate_configs = 10;
    int rate_realizations = 100000;
    int shadowing_pairs = 1000000;
    std::uint64_t seed = 20240607;
};

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::vector<std::string> lines;  // one per check
};

struct ValidationReport {
    std::vector<SuiteResult> suites;

    bool passed() const;
    std::string text() const;
};

/// Closed-form power terms against the signal-level Monte Carlo simulator on
/// randomized serving/interferer configurations.
SuiteResult validate_rate_vs_mc(const ValidationOptions& opt);

/// Marginal and transition probabilities of the channel states against
/// simulated correlated-shadowing pairs.
SuiteResult validate_transitions_vs_mc(const ValidationOptions& opt);

/// Point-based solver against exhaustive tree search on small models.
SuiteResult validate_pbvi_vs_expectimax(const ValidationOptions& opt);

ValidationReport run_validation(const ValidationOptions& opt = {});

}  // namespace cfho
