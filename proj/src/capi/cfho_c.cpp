#include "cfho.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "cfho/error.hpp"
#include "cfho/experiment.hpp"
#include "cfho/validation.hpp"
#include "cfho/version.hpp"

struct cfho_config {
    cfho::ExperimentConfig cfg;
};

struct cfho_results {
    cfho::ExperimentConfig cfg;
    cfho::SimMetrics metrics;
};

namespace {

thread_local std::string g_last_error;

cfho_status fail(cfho_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename F>
cfho_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return CFHO_OK;
    } catch (const cfho::ConfigError& e) {
        return fail(CFHO_ERR_CONFIG, e.what());
    } catch (const cfho::IoError& e) {
        return fail(CFHO_ERR_IO, e.what());
    } catch (const cfho::ContractViolation& e) {
        return fail(CFHO_ERR_INVALID_ARGUMENT, e.what());
    } catch (const cfho::NumericalError& e) {
        return fail(CFHO_ERR_NUMERICAL, e.what());
    } catch (const std::bad_alloc&) {
        return fail(CFHO_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(CFHO_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(CFHO_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool cond, const char* what) {
    if (!cond) throw cfho::ContractViolation(what);
}

}  // namespace

extern "C" {

const char* cfho_version(void) { return cfho::kVersion; }

const char* cfho_last_error(void) { return g_last_error.c_str(); }

void cfho_string_free(char* s) { std::free(s); }

cfho_status cfho_config_default(const char* profile, cfho_config** out) {
    return guarded([&] {
        require(out != nullptr, "output handle pointer is null");
        *out = nullptr;
        auto cfg = cfho::ExperimentConfig::profile(profile ? profile : "desk");
        *out = new cfho_config{std::move(cfg)};
    });
}

cfho_status cfho_config_load(const char* path, cfho_config** out) {
    return guarded([&] {
        require(out != nullptr && path != nullptr, "null argument");
        *out = nullptr;
        auto cfg = cfho::load_config(path);
        *out = new cfho_config{std::move(cfg)};
    });
}

cfho_status cfho_config_parse(const char* json_text, cfho_config** out) {
    return guarded([&] {
        require(out != nullptr && json_text != nullptr, "null argument");
        *out = nullptr;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::exception& e) {
            throw cfho::ConfigError(std::string("cannot parse configuration: ") + e.what());
        }
        auto cfg = cfho::config_from_json(j);
        *out = new cfho_config{std::move(cfg)};
    });
}

cfho_status cfho_config_set(cfho_config* cfg, const char* dotted_key, const char* value) {
    return guarded([&] {
        require(cfg && dotted_key && value, "null argument");
        cfho::apply_override(cfg->cfg, dotted_key, value);
    });
}

cfho_status cfho_config_to_json(const cfho_config* cfg, char** out_json) {
    return guarded([&] {
        require(cfg && out_json, "null argument");
        *out_json = dup_string(cfho::to_json(cfg->cfg).dump(2));
    });
}

cfho_status cfho_config_out_dir(const cfho_config* cfg, char** out_dir) {
    return guarded([&] {
        require(cfg && out_dir, "null argument");
        *out_dir = dup_string(cfg->cfg.out_dir);
    });
}

void cfho_config_free(cfho_config* cfg) { delete cfg; }

cfho_status cfho_run(const cfho_config* cfg, cfho_results** out) {
    return guarded([&] {
        require(cfg && out, "null argument");
        *out = nullptr;
        auto metrics = cfho::run_experiment(cfg->cfg);
        *out = new cfho_results{cfg->cfg, std::move(metrics)};
    });
}

cfho_status cfho_results_record_count(const cfho_results* res, size_t* out) {
    return guarded([&] {
        require(res && out, "null argument");
        *out = res->metrics.records.size();
    });
}

cfho_status cfho_results_record(const cfho_results* res, size_t index, cfho_record* out) {
    return guarded([&] {
        require(res && out, "null argument");
        require(index < res->metrics.records.size(), "record index out of range");
        const auto& r = res->metrics.records[index];
        out->trial = r.trial;
        out->t = r.t;
        out->scheme = static_cast<int>(r.scheme);
        out->se_nats = r.se;
        out->n_ho = r.n_ho;
        out->cum_ho = r.cum_ho;
        out->se_adj = r.se_adj;
        out->triggered = r.triggered ? 1 : 0;
    });
}

cfho_status cfho_results_csv(const cfho_results* res, char** out_csv) {
    return guarded([&] {
        require(res && out_csv, "null argument");
        *out_csv = dup_string(cfho::per_cycle_csv(res->metrics));
    });
}

cfho_status cfho_results_summary_json(const cfho_results* res, char** out_json) {
    return guarded([&] {
        require(res && out_json, "null argument");
        *out_json = dup_string(cfho::summarize(res->metrics, res->cfg.mobility.trip_cycles).dump(2));
    });
}

cfho_status cfho_results_export(const cfho_results* res, const char* out_dir) {
    return guarded([&] {
        require(res && out_dir, "null argument");
        cfho::export_metrics(res->metrics, res->cfg, out_dir);
    });
}

void cfho_results_free(cfho_results* res) { delete res; }

cfho_status cfho_validate(int quick, uint64_t seed, char** report) {
    bool passed = false;
    const cfho_status st = guarded([&] {
        cfho::ValidationOptions opt;
        opt.seed = seed;
        if (quick) {
            opt.rate_configs = 4;
            opt.rate_realizations = 20000;
        }
        const auto rep = cfho::run_validation(opt);
        passed = rep.passed();
        if (report) *report = dup_string(rep.text());
    });
    if (st != CFHO_OK) return st;
    if (!passed) return fail(CFHO_ERR_VALIDATION, "one or more validation suites failed");
    return CFHO_OK;
}

cfho_status cfho_dump_model(const cfho_config* cfg, int trial, int cycle, char** out_text) {
    return guarded([&] {
        require(cfg && out_text, "null argument");
        const auto derived = cfho::derive_trial_policy(cfg->cfg, trial, cycle);
        std::ostringstream os;
        cfho::write_model(os, derived.model);
        *out_text = dup_string(os.str());
    });
}

cfho_status cfho_noise_power(double density_dbm_hz, double figure_db, double bandwidth_hz, double* out_w) {
    return guarded([&] {
        require(out_w != nullptr, "null argument");
        *out_w = cfho::noise_power(density_dbm_hz, figure_db, bandwidth_hz);
    });
}

cfho_status cfho_bvn_upper_rect(double a, double b, double corr, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        require(corr >= -1.0 && corr <= 1.0, "correlation must lie in [-1, 1]");
        *out = cfho::bvn_upper_rect(a, b, corr);
    });
}

cfho_status cfho_overhead_adjusted_se(double se, int n_ho, double delta, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        *out = cfho::overhead_adjusted_se(se, n_ho, delta);
    });
}

const char* cfho_scheme_name(int scheme) {
    switch (scheme) {
        case CFHO_SCHEME_POMDP_PLAIN: return "pomdp_plain";
        case CFHO_SCHEME_POMDP_HO_MIN: return "pomdp_ho_min";
        case CFHO_SCHEME_LSF_TIME: return "lsf_time";
        case CFHO_SCHEME_LSF_THRESHOLD: return "lsf_threshold";
        default: return nullptr;
    }
}

}  // extern "C"
