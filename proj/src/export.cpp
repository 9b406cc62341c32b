#include <cstdio>
#include <fstream>
#include <string>
#include <system_error>

#include "cfho/error.hpp"
#include "cfho/experiment.hpp"
#include "cfho/version.hpp"

namespace cfho {

namespace {

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string per_cycle_csv(const SimMetrics& metrics) {
    std::string out = "trial,t,scheme,se_nats,n_ho,cum_ho,se_adj\n";
    for (const auto& r : metrics.records) {
        out += std::to_string(r.trial);
        out += ',';
        out += std::to_string(r.t);
        out += ',';
        out += to_string(r.scheme);
        out += ',';
        out += fmt9(r.se);
        out += ',';
        out += std::to_string(r.n_ho);
        out += ',';
        out += std::to_string(r.cum_ho);
        out += ',';
        out += fmt9(r.se_adj);
        out += '\n';
    }
    return out;
}

void export_metrics(const SimMetrics& metrics, const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    if (!std::filesystem::is_directory(out_dir)) throw IoError("output path " + out_dir.string() + " is not a directory");

    write_file(out_dir / "per_cycle.csv", per_cycle_csv(metrics));
    write_file(out_dir / "summary.json", summarize(metrics, cfg.mobility.trip_cycles).dump(2) + "\n");

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["master_seed"] = cfg.seeds.master;
    manifest["config"] = to_json(cfg);
    manifest["files"] = {"per_cycle.csv", "summary.json"};
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace cfho
