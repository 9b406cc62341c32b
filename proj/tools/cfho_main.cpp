#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfho.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

int exit_code(cfho_status st) {
    switch (st) {
        case CFHO_OK: return kExitOk;
        case CFHO_ERR_CONFIG:
        case CFHO_ERR_INVALID_ARGUMENT: return kExitConfig;
        case CFHO_ERR_VALIDATION: return kExitValidation;
        case CFHO_ERR_IO: return kExitIo;
        default: return kExitInternal;
    }
}

struct StatusError {
    cfho_status status;
};

void check(cfho_status st, const std::string& context) {
    if (st == CFHO_OK) return;
    std::cerr << "cfho: " << context << ": " << cfho_last_error() << "\n";
    throw StatusError{st};
}

using ConfigPtr = std::unique_ptr<cfho_config, decltype(&cfho_config_free)>;
using ResultsPtr = std::unique_ptr<cfho_results, decltype(&cfho_results_free)>;

std::string take(char* s) {
    std::string out = s ? s : "";
    cfho_string_free(s);
    return out;
}

struct CommonOptions {
    std::string config_path;
    std::string profile;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::string scheme;
    std::string out;
    std::optional<int> workers;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--profile", o.profile, "Base profile when no config file is given (desk or table1)");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--trials", o.trials, "Number of trials");
    cmd->add_option("--scheme", o.scheme, "Scheme list, comma separated");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--workers", o.workers, "Worker threads");
    cmd->add_option("--set", o.overrides, "Override as section.key=value (repeatable)");
}

ConfigPtr build_config(const CommonOptions& o) {
    cfho_config* raw = nullptr;
    if (!o.config_path.empty()) {
        check(cfho_config_load(o.config_path.c_str(), &raw), "loading " + o.config_path);
    } else {
        check(cfho_config_default(o.profile.empty() ? nullptr : o.profile.c_str(), &raw), "selecting profile");
    }
    ConfigPtr cfg(raw, &cfho_config_free);
    auto set = [&](const std::string& key, const std::string& value) {
        check(cfho_config_set(cfg.get(), key.c_str(), value.c_str()), "setting " + key);
    };
    for (const auto& ov : o.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            std::cerr << "cfho: override '" << ov << "' must have the form section.key=value\n";
            throw StatusError{CFHO_ERR_CONFIG};
        }
        set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (o.seed) set("seeds.master", std::to_string(*o.seed));
    if (o.trials) set("seeds.trials", std::to_string(*o.trials));
    if (!o.scheme.empty()) set("engine.scheme", "\"" + o.scheme + "\"");
    if (o.workers) set("workers", std::to_string(*o.workers));
    return cfg;
}

std::string resolve_out_dir(const CommonOptions& o, const cfho_config* cfg) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("CFHO_OUT_DIR"); env && *env) return env;
    char* dir = nullptr;
    check(cfho_config_out_dir(cfg, &dir), "reading output directory");
    std::string from_cfg = take(dir);
    return from_cfg.empty() ? "cfho_out" : from_cfg;
}

void run_and_export(const cfho_config* cfg, const std::string& out_dir) {
    cfho_results* raw = nullptr;
    check(cfho_run(cfg, &raw), "running experiment");
    ResultsPtr res(raw, &cfho_results_free);
    check(cfho_results_export(res.get(), out_dir.c_str()), "exporting results");
    char* summary = nullptr;
    check(cfho_results_summary_json(res.get(), &summary), "summarizing");
    take(summary);
    std::cout << "wrote " << out_dir << "/per_cycle.csv, summary.json, manifest.json\n";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string path_safe(std::string s) {
    for (char& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Handoff management simulator for user-centric cell-free massive MIMO"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cfho_version()));

    CommonOptions run_opts;
    auto* run = app.add_subcommand("run", "Run an experiment and export its metrics");
    add_common(run, run_opts);

    CommonOptions sweep_opts;
    std::string sweep_param;
    std::string sweep_values;
    auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a configuration key");
    add_common(sweep, sweep_opts);
    sweep->add_option("--param", sweep_param, "Dotted configuration key")->required();
    sweep->add_option("--values", sweep_values, "Comma-separated values")->required();

    bool quick = false;
    std::uint64_t validate_seed = 20240607;
    auto* validate = app.add_subcommand("validate", "Run the oracle suites");
    validate->add_flag("--quick", quick, "Smaller Monte Carlo samples");
    validate->add_option("--seed", validate_seed, "Seed of the oracle suites");

    CommonOptions dump_opts;
    int dump_trial = 0;
    int dump_cycle = 0;
    std::string dump_file;
    auto* dump = app.add_subcommand("dump-model", "Write the model selected at one cycle of one trial");
    dump->add_option("--config", dump_opts.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    dump->add_option("--profile", dump_opts.profile, "Base profile when no config file is given");
    dump->add_option("--seed", dump_opts.seed, "Master seed");
    dump->add_option("--set", dump_opts.overrides, "Override as section.key=value (repeatable)");
    dump->add_option("--trial", dump_trial, "Trial index");
    dump->add_option("--cycle", dump_cycle, "Anchor cycle");
    dump->add_option("--file", dump_file, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            ConfigPtr cfg = build_config(run_opts);
            run_and_export(cfg.get(), resolve_out_dir(run_opts, cfg.get()));
        } else if (*sweep) {
            const auto values = split(sweep_values, ',');
            if (values.empty()) {
                std::cerr << "cfho: --values lists no values\n";
                return kExitConfig;
            }
            ConfigPtr base = build_config(sweep_opts);
            const std::string root = resolve_out_dir(sweep_opts, base.get());
            for (const auto& v : values) {
                CommonOptions point = sweep_opts;
                point.overrides.push_back(sweep_param + "=" + v);
                ConfigPtr cfg = build_config(point);
                run_and_export(cfg.get(), root + "/" + path_safe(sweep_param + "=" + v));
            }
        } else if (*validate) {
            char* report = nullptr;
            const cfho_status st = cfho_validate(quick ? 1 : 0, validate_seed, &report);
            std::cout << take(report);
            if (st != CFHO_OK) {
                std::cerr << "cfho: validation: " << cfho_last_error() << "\n";
                return exit_code(st);
            }
        } else if (*dump) {
            ConfigPtr cfg = build_config(dump_opts);
            char* text = nullptr;
            check(cfho_dump_model(cfg.get(), dump_trial, dump_cycle, &text), "dumping model");
            const std::string body = take(text);
            if (dump_file.empty()) {
                std::cout << body;
            } else {
                std::ofstream out(dump_file, std::ios::binary);
                out << body;
                if (!out) {
                    std::cerr << "cfho: cannot write " << dump_file << "\n";
                    return kExitIo;
                }
            }
        }
    } catch (const StatusError& e) {
        return exit_code(e.status);
    }
    return kExitOk;
}
