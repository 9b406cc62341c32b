#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cfho/error.hpp"
#include "cfho/experiment.hpp"

namespace cfho {

using nlohmann::json;

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double noise_power(double density_dbm_hz, double figure_db, double bandwidth_hz) {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
    return std::pow(10.0, (density_dbm_hz + figure_db + 10.0 * std::log10(bandwidth_hz) - 30.0) / 10.0);
}

ExperimentConfig ExperimentConfig::desk() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::table1() {
    ExperimentConfig c;
    c.network.num_aps = 125;
    c.network.area_side_m = 1000.0;
    return c;
}

ExperimentConfig ExperimentConfig::profile(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "table1") return table1();
    throw ConfigError("unknown profile '" + name + "' (expected desk or table1)");
}

RadioParams ExperimentConfig::radio_params() const {
    RadioParams r;
    r.p_dl = dbm_to_watt(radio.p_dl_dbm);
    r.p_ul = dbm_to_watt(radio.p_ul_dbm);
    r.noise_power = noise_power(radio.noise_density_dbm_hz, radio.noise_figure_db, radio.bandwidth_hz);
    r.M = radio.antennas;
    r.tau_c = radio.tau_c;
    r.tau_p = radio.tau_p;
    r.pilot_index = radio.pilot_index;
    return r;
}

void ExperimentConfig::validate() const {
    if (network.num_aps < 1) throw ConfigError("network.num_aps must be at least 1");
    if (!(network.area_side_m > 0.0)) throw ConfigError("network.area_side_m must be positive");
    if (!(network.ap_height_m > network.user_height_m)) {
        throw ConfigError("network.ap_height_m must exceed network.user_height_m");
    }
    if (!(network.wrap_margin_m >= 0.0 && network.wrap_margin_m < network.area_side_m / 2.0)) {
        throw ConfigError("network.wrap_margin_m must lie in [0, area_side_m/2)");
    }
    if (!(mobility.speed_mps >= 0.0)) throw ConfigError("mobility.speed_mps must be non-negative");
    if (!(mobility.step_duration_s > 0.0)) throw ConfigError("mobility.step_duration_s must be positive");
    if (mobility.trip_cycles < 0) throw ConfigError("mobility.trip_cycles must be non-negative");
    if (!(radio.carrier_hz > 0.0 && radio.sample_period_s >= 0.0)) {
        throw ConfigError("radio.carrier_hz must be positive and radio.sample_period_s non-negative");
    }
    radio_params().validate();
    PathLossParams{channel.d0_m, channel.alpha_pl, network.ap_height_m - network.user_height_m}.validate();
    ShadowingParams{channel.sigma_sh_db, channel.d_decorr_m, channel.iota}.validate();
    if (!(quantizer.good_distance_m < quantizer.threshold_distance_m &&
          quantizer.threshold_distance_m < quantizer.bad_distance_m && quantizer.good_distance_m >= 0.0)) {
        throw ConfigError("quantizer distances must satisfy 0 <= good < threshold < bad");
    }
    if (engine.schemes.empty()) throw ConfigError("engine.scheme must name at least one scheme");
    engine_config(engine.schemes.front()).validate(static_cast<std::size_t>(network.num_aps));
    if (!(overhead.delta >= 0.0 && overhead.delta <= 1.0)) throw ConfigError("overhead.delta must lie in [0, 1]");
    if (seeds.trials < 0) throw ConfigError("seeds.trials must be non-negative");
    if (workers < 1) throw ConfigError("workers must be at least 1");
}

SystemModel ExperimentConfig::system_template() const {
    SystemModel sys;
    sys.layout.area_side = network.area_side_m;
    sys.layout.ap_height = network.ap_height_m;
    sys.layout.user_height = network.user_height_m;
    sys.layout.wrap_margin = network.wrap_margin_m;
    sys.path_loss = {channel.d0_m, channel.alpha_pl, network.ap_height_m - network.user_height_m};
    sys.shadowing = {channel.sigma_sh_db, channel.d_decorr_m, channel.iota};
    sys.quantizer = StateQuantizer::from_distances(sys.path_loss, quantizer.threshold_distance_m,
                                                   quantizer.good_distance_m, quantizer.bad_distance_m);
    sys.radio = radio_params();
    const double wavelength = 3e8 / radio.carrier_hz;
    sys.aging = AgingProfile::make(mobility.speed_mps / wavelength, radio.sample_period_s, radio.tau_c);
    sys.speed = mobility.speed_mps;
    sys.step_duration = mobility.step_duration_s;
    return sys;
}

EngineConfig ExperimentConfig::engine_config(Scheme scheme) const {
    EngineConfig e;
    e.b_con = engine.b_con;
    e.horizon = engine.horizon;
    e.r_threshold = engine.r_threshold_nats;
    e.gamma = engine.gamma;
    e.scheme = scheme;
    e.pbvi.belief_budget = engine.belief_budget;
    e.pbvi.expansion_depth = engine.expansion_depth;
    e.pbvi.exhaustive_observations = engine.exhaustive_observations;
    e.ho_min_cache = engine.ho_min_cache;
    e.convention = engine.convention;
    return e;
}

namespace {

std::string schemes_string(const std::vector<Scheme>& schemes) {
    std::string out;
    for (std::size_t i = 0; i < schemes.size(); ++i) {
        if (i) out += ',';
        out += to_string(schemes[i]);
    }
    return out;
}

std::vector<Scheme> parse_schemes(const json& v) {
    std::vector<std::string> names;
    if (v.is_array()) {
        for (const auto& e : v) names.push_back(e.get<std::string>());
    } else {
        std::stringstream ss(v.get<std::string>());
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) names.push_back(item.substr(b, e - b + 1));
        }
    }
    std::vector<Scheme> out;
    for (const auto& n : names) out.push_back(parse_scheme(n));
    if (out.empty()) throw ConfigError("engine.scheme must name at least one scheme");
    return out;
}

std::string convention_name(MomentConvention c) { return c == MomentConvention::scaled ? "scaled" : "exact"; }

MomentConvention parse_convention(const std::string& s) {
    if (s == "scaled") return MomentConvention::scaled;
    if (s == "exact") return MomentConvention::exact;
    throw ConfigError("engine.convention must be 'scaled' or 'exact'");
}

std::string rule_name(OverheadRule r) { return r == OverheadRule::linear ? "linear" : "geometric"; }

OverheadRule parse_rule(const std::string& s) {
    if (s == "linear") return OverheadRule::linear;
    if (s == "geometric") return OverheadRule::geometric;
    throw ConfigError("overhead.rule must be 'linear' or 'geometric'");
}

using Setter = std::function<void(ExperimentConfig&, const json&)>;
using SectionSetters = std::map<std::string, Setter>;

template <typename T>
Setter field(T ExperimentConfig::*section, auto member) {
    return [section, member](ExperimentConfig& c, const json& v) {
        using Value = std::remove_reference_t<decltype((c.*section).*member)>;
        (c.*section).*member = v.get<Value>();
    };
}

const std::map<std::string, SectionSetters>& setters() {
    using C = ExperimentConfig;
    static const std::map<std::string, SectionSetters> table = {
        {"network",
         {{"num_aps", field(&C::network, &C::Network::num_aps)},
          {"area_side_m", field(&C::network, &C::Network::area_side_m)},
          {"ap_height_m", field(&C::network, &C::Network::ap_height_m)},
          {"user_height_m", field(&C::network, &C::Network::user_height_m)},
          {"wrap_margin_m", field(&C::network, &C::Network::wrap_margin_m)},
          {"fixed_layout", field(&C::network, &C::Network::fixed_layout)}}},
        {"mobility",
         {{"speed_mps", field(&C::mobility, &C::Mobility::speed_mps)},
          {"step_duration_s", field(&C::mobility, &C::Mobility::step_duration_s)},
          {"trip_cycles", field(&C::mobility, &C::Mobility::trip_cycles)},
          {"start_offset_x_m", field(&C::mobility, &C::Mobility::start_offset_x_m)},
          {"start_offset_y_m", field(&C::mobility, &C::Mobility::start_offset_y_m)}}},
        {"radio",
         {{"p_dl_dbm", field(&C::radio, &C::Radio::p_dl_dbm)},
          {"p_ul_dbm", field(&C::radio, &C::Radio::p_ul_dbm)},
          {"noise_density_dbm_hz", field(&C::radio, &C::Radio::noise_density_dbm_hz)},
          {"noise_figure_db", field(&C::radio, &C::Radio::noise_figure_db)},
          {"bandwidth_hz", field(&C::radio, &C::Radio::bandwidth_hz)},
          {"antennas", field(&C::radio, &C::Radio::antennas)},
          {"tau_c", field(&C::radio, &C::Radio::tau_c)},
          {"tau_p", field(&C::radio, &C::Radio::tau_p)},
          {"pilot_index", field(&C::radio, &C::Radio::pilot_index)},
          {"carrier_hz", field(&C::radio, &C::Radio::carrier_hz)},
          {"sample_period_s", field(&C::radio, &C::Radio::sample_period_s)}}},
        {"channel",
         {{"d0_m", field(&C::channel, &C::Channel::d0_m)},
          {"alpha_pl", field(&C::channel, &C::Channel::alpha_pl)},
          {"sigma_sh_db", field(&C::channel, &C::Channel::sigma_sh_db)},
          {"d_decorr_m", field(&C::channel, &C::Channel::d_decorr_m)},
          {"iota", field(&C::channel, &C::Channel::iota)}}},
        {"quantizer",
         {{"threshold_distance_m", field(&C::quantizer, &C::Quantizer::threshold_distance_m)},
          {"good_distance_m", field(&C::quantizer, &C::Quantizer::good_distance_m)},
          {"bad_distance_m", field(&C::quantizer, &C::Quantizer::bad_distance_m)}}},
        {"engine",
         {{"scheme", [](C& c, const json& v) { c.engine.schemes = parse_schemes(v); }},
          {"b_con", field(&C::engine, &C::Engine::b_con)},
          {"horizon", field(&C::engine, &C::Engine::horizon)},
          {"r_threshold_nats", field(&C::engine, &C::Engine::r_threshold_nats)},
          {"gamma", field(&C::engine, &C::Engine::gamma)},
          {"belief_budget", field(&C::engine, &C::Engine::belief_budget)},
          {"expansion_depth", field(&C::engine, &C::Engine::expansion_depth)},
          {"exhaustive_observations", field(&C::engine, &C::Engine::exhaustive_observations)},
          {"ho_min_cache", field(&C::engine, &C::Engine::ho_min_cache)},
          {"convention",
           [](C& c, const json& v) { c.engine.convention = parse_convention(v.get<std::string>()); }}}},
        {"overhead",
         {{"delta", field(&C::overhead, &C::Overhead::delta)},
          {"rule", [](C& c, const json& v) { c.overhead.rule = parse_rule(v.get<std::string>()); }}}},
        {"seeds",
         {{"master", field(&C::seeds, &C::Seeds::master)}, {"trials", field(&C::seeds, &C::Seeds::trials)}}},
    };
    return table;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
    json j;
    j["network"] = {{"num_aps", c.network.num_aps},
                    {"area_side_m", c.network.area_side_m},
                    {"ap_height_m", c.network.ap_height_m},
                    {"user_height_m", c.network.user_height_m},
                    {"wrap_margin_m", c.network.wrap_margin_m},
                    {"fixed_layout", c.network.fixed_layout}};
    j["mobility"] = {{"speed_mps", c.mobility.speed_mps},
                     {"step_duration_s", c.mobility.step_duration_s},
                     {"trip_cycles", c.mobility.trip_cycles},
                     {"start_offset_x_m", c.mobility.start_offset_x_m},
                     {"start_offset_y_m", c.mobility.start_offset_y_m}};
    j["radio"] = {{"p_dl_dbm", c.radio.p_dl_dbm},
                  {"p_ul_dbm", c.radio.p_ul_dbm},
                  {"noise_density_dbm_hz", c.radio.noise_density_dbm_hz},
                  {"noise_figure_db", c.radio.noise_figure_db},
                  {"bandwidth_hz", c.radio.bandwidth_hz},
                  {"antennas", c.radio.antennas},
                  {"tau_c", c.radio.tau_c},
                  {"tau_p", c.radio.tau_p},
                  {"pilot_index", c.radio.pilot_index},
                  {"carrier_hz", c.radio.carrier_hz},
                  {"sample_period_s", c.radio.sample_period_s}};
    j["channel"] = {{"d0_m", c.channel.d0_m},
                    {"alpha_pl", c.channel.alpha_pl},
                    {"sigma_sh_db", c.channel.sigma_sh_db},
                    {"d_decorr_m", c.channel.d_decorr_m},
                    {"iota", c.channel.iota}};
    j["quantizer"] = {{"threshold_distance_m", c.quantizer.threshold_distance_m},
                      {"good_distance_m", c.quantizer.good_distance_m},
                      {"bad_distance_m", c.quantizer.bad_distance_m}};
    j["engine"] = {{"scheme", schemes_string(c.engine.schemes)},
                   {"b_con", c.engine.b_con},
                   {"horizon", c.engine.horizon},
                   {"r_threshold_nats", c.engine.r_threshold_nats},
                   {"gamma", c.engine.gamma},
                   {"belief_budget", c.engine.belief_budget},
                   {"expansion_depth", c.engine.expansion_depth},
                   {"exhaustive_observations", c.engine.exhaustive_observations},
                   {"ho_min_cache", c.engine.ho_min_cache},
                   {"convention", convention_name(c.engine.convention)}};
    j["overhead"] = {{"delta", c.overhead.delta}, {"rule", rule_name(c.overhead.rule)}};
    j["seeds"] = {{"master", c.seeds.master}, {"trials", c.seeds.trials}};
    j["workers"] = c.workers;
    j["out_dir"] = c.out_dir;
    return j;
}

ExperimentConfig config_from_json(const json& j, const ExperimentConfig& base) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    ExperimentConfig c = base;
    if (j.contains("profile")) c = ExperimentConfig::profile(j.at("profile").get<std::string>());
    const auto& table = setters();
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "profile") continue;
            if (key == "workers") {
                c.workers = value.get<int>();
                continue;
            }
            if (key == "out_dir") {
                c.out_dir = value.get<std::string>();
                continue;
            }
            const auto sec = table.find(key);
            if (sec == table.end()) throw ConfigError("unknown configuration section '" + key + "'");
            if (!value.is_object()) throw ConfigError("configuration section '" + key + "' must be an object");
            for (const auto& [name, v] : value.items()) {
                const auto setter = sec->second.find(name);
                if (setter == sec->second.end()) throw ConfigError("unknown configuration key '" + key + "." + name + "'");
                setter->second(c, v);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration value has the wrong type: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse configuration file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value) {
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;
    }
    json j = to_json(cfg);
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) {
        if (dotted_key != "workers" && dotted_key != "out_dir") {
            throw ConfigError("override key '" + dotted_key + "' must have the form section.key");
        }
        if (dotted_key == "out_dir" && !parsed.is_string()) parsed = value;
        j[dotted_key] = parsed;
    } else {
        const std::string section = dotted_key.substr(0, dot);
        const std::string key = dotted_key.substr(dot + 1);
        const auto& table = setters();
        const auto sec = table.find(section);
        if (sec == table.end() || !sec->second.count(key)) {
            throw ConfigError("unknown configuration key '" + dotted_key + "'");
        }
        j[section][key] = parsed;
    }
    cfg = config_from_json(j, cfg);
}

}  // namespace cfho
