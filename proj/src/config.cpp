#include "gatslice/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gatslice/error.hpp"
#include "gatslice/format.hpp"

namespace gatslice {

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) { return format_number(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string join(std::span<const double> xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        out.push_back(tok);
    }
    return out;
}

Entries entries(const RunConfig& cfg) {
    const ExperimentConfig& x = cfg.experiment;
    const EnvConfig& e = x.env;
    const TrainerConfig& t = x.trainer;
    const nn::NetConfig& n = t.learner.net;
    Entries out{
        {"run.algorithm", std::string(algorithm_name(x.algorithm))},
        {"run.seed", std::to_string(x.seed)},
        {"run.periods", fmt(t.periods)},
        {"run.output", cfg.output},
        {"run.checkpoint_every", fmt(x.checkpoint_every)},
        {"run.log_every", fmt(x.log_every)},
        {"scenario.arena_width_m", fmt(e.scenario.arena.width)},
        {"scenario.arena_height_m", fmt(e.scenario.arena.height)},
        {"scenario.rings", fmt(e.scenario.rings)},
        {"scenario.inter_site_distance_m", fmt(e.scenario.inter_site_distance)},
        {"scenario.neighbor_radius_factor", fmt(e.scenario.neighbor_radius_factor)},
        {"scenario.corner_fraction", fmt(e.scenario.corner_fraction)},
    };
    std::string names;
    for (std::size_t i = 0; i < e.slices.size(); ++i) names += (i ? "," : "") + e.slices[i].name;
    out.emplace_back("traffic.slices", names);
    out.emplace_back("traffic.normalizers", e.normalizers.empty() ? "auto" : join(e.normalizers));
    for (const SliceProfile& s : e.slices) {
        const std::string p = "traffic." + s.name + ".";
        out.emplace_back(p + "subscribers", fmt(s.subscribers));
        out.emplace_back(p + "speed_min_mps", fmt(s.speed_min));
        out.emplace_back(p + "speed_max_mps", fmt(s.speed_max));
        out.emplace_back(p + "interarrival_s", s.interarrival.describe());
        out.emplace_back(p + "packet_size_bits", s.packet_size.describe());
        out.emplace_back(p + "sla_rate_bps", fmt(s.sla_rate_bps));
        out.emplace_back(p + "sla_latency_s", fmt(s.sla_latency_s));
    }
    const Entries rest{
        {"link.tx_power_dbm", fmt(e.link.tx_power_dbm)},
        {"link.noise_psd_dbm_hz", fmt(e.link.noise_psd_dbm_hz)},
        {"link.pathloss_const_db", fmt(e.link.pathloss_const_db)},
        {"link.pathloss_slope_db", fmt(e.link.pathloss_slope_db)},
        {"link.min_distance_m", fmt(e.link.d_min_m)},
        {"link.rayleigh", fmt(e.link.rayleigh)},
        {"link.shadowing_sigma_db", fmt(e.link.shadowing_sigma_db)},
        {"env.bandwidth_mhz", fmt(e.total_bandwidth_hz / 1e6)},
        {"env.delta_mhz", fmt(e.delta_hz / 1e6)},
        {"env.slots", fmt(e.timing.slots)},
        {"env.slot_ms", fmt(e.timing.slot_s * 1e3)},
        {"env.alpha", fmt(e.weights.alpha)},
        {"env.beta", join(e.weights.beta)},
        {"env.c1", fmt(e.weights.c1)},
        {"env.c2", fmt(e.weights.c2)},
        {"env.c3", fmt(e.weights.c3)},
        {"env.gamma", fmt(e.weights.gamma)},
        {"learner.embed", fmt(n.embed)},
        {"learner.att", fmt(n.att)},
        {"learner.head_out", fmt(n.head_out)},
        {"learner.heads", fmt(n.heads)},
        {"learner.gat_layers", fmt(n.gat_layers)},
        {"learner.hidden", fmt(n.hidden)},
        {"learner.tau", fmt(n.tau)},
        {"learner.dueling", fmt(n.dueling)},
        {"learner.double_q", fmt(t.learner.double_q)},
        {"learner.lr_q", fmt(t.learner.lr_q)},
        {"learner.lr_critic", fmt(t.learner.lr_critic)},
        {"learner.lr_actor", fmt(t.learner.lr_actor)},
        {"learner.entropy_weight", fmt(t.learner.entropy_weight)},
        {"learner.is_truncation", fmt(t.learner.is_truncation)},
        {"trainer.batch", fmt(t.batch)},
        {"trainer.replay_capacity", fmt(t.replay_capacity)},
        {"trainer.target_sync", fmt(t.target_sync)},
        {"trainer.epsilon_end", fmt(t.epsilon_end)},
        {"trainer.ramp_fraction", fmt(t.ramp_fraction)},
    };
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

class Reader {
public:
    explicit Reader(const KeyValues& kv) : kv_(kv) {}

    const std::string& raw(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("missing config key " + key);
        return it->second;
    }
    double number(const std::string& key) const {
        const std::string& v = raw(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": '" + v + "' is not a number");
        }
    }
    int integer(const std::string& key) const {
        const double d = number(key);
        if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError("config key " + key + " must be an integer");
        return static_cast<int>(d);
    }
    std::uint64_t unsigned_integer(const std::string& key) const {
        const std::string& v = raw(key);
        try {
            std::size_t used = 0;
            const auto u = std::stoull(v, &used);
            if (used != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument(v);
            return u;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": '" + v + "' is not a non-negative integer");
        }
    }
    bool boolean(const std::string& key) const {
        std::string v = raw(key);
        std::transform(v.begin(), v.end(), v.begin(), ::tolower);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("config key " + key + ": '" + raw(key) + "' is not a boolean");
    }
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : split(raw(key), ',')) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("config key " + key + ": '" + tok + "' is not a number");
            }
        }
        return out;
    }
    Distribution distribution(const std::string& key) const {
        try {
            return Distribution::parse(raw(key));
        } catch (const ConfigError& e) {
            throw ConfigError("config key " + key + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config key " + key + ": " + e.what());
        }
    }

private:
    const KeyValues& kv_;
};

} // namespace

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.experiment.trainer.learner.net.demand_dim = static_cast<int>(cfg.experiment.env.slices.size());
    cfg.experiment.checkpoint_every = 500;
    return cfg;
}

KeyValues to_key_values(const RunConfig& cfg) {
    KeyValues kv;
    for (auto& [k, v] : entries(cfg)) kv[k] = v;
    return kv;
}

RunConfig from_key_values(const KeyValues& values) {
    RunConfig base = default_run_config();

    // Slice sections depend on the declared slice list; named reference
    // slices start from their tabulated values.
    if (auto it = values.find("traffic.slices"); it != values.end()) {
        const auto reference = reference_slice_profiles();
        std::vector<SliceProfile> slices;
        for (const auto& name : split(it->second, ',')) {
            if (name.empty()) throw ConfigError("traffic.slices has an empty name");
            auto ref = std::find_if(reference.begin(), reference.end(), [&](const SliceProfile& s) { return s.name == name; });
            if (ref != reference.end()) {
                slices.push_back(*ref);
            } else {
                SliceProfile s;
                s.name = name;
                slices.push_back(s);
            }
        }
        base.experiment.env.slices = slices;
        base.experiment.env.weights.beta.assign(slices.size(), 1.0);
    }
    KeyValues merged = to_key_values(base);
    for (const auto& [k, v] : values) {
        if (!merged.count(k)) throw ConfigError("unknown config key '" + k + "'");
        merged[k] = v;
    }

    const Reader r(merged);
    RunConfig cfg = base;
    ExperimentConfig& x = cfg.experiment;
    x.algorithm = parse_algorithm(r.raw("run.algorithm"));
    x.seed = r.unsigned_integer("run.seed");
    x.trainer.periods = r.integer("run.periods");
    cfg.output = r.raw("run.output");
    x.checkpoint_every = r.integer("run.checkpoint_every");
    x.log_every = r.integer("run.log_every");
    if (x.checkpoint_every < 0 || x.log_every < 0) throw ConfigError("run: intervals must be >= 0");

    EnvConfig& e = x.env;
    e.scenario.arena.width = r.number("scenario.arena_width_m");
    e.scenario.arena.height = r.number("scenario.arena_height_m");
    e.scenario.rings = r.integer("scenario.rings");
    e.scenario.inter_site_distance = r.number("scenario.inter_site_distance_m");
    e.scenario.neighbor_radius_factor = r.number("scenario.neighbor_radius_factor");
    e.scenario.corner_fraction = r.number("scenario.corner_fraction");

    for (SliceProfile& s : e.slices) {
        const std::string p = "traffic." + s.name + ".";
        s.subscribers = r.integer(p + "subscribers");
        s.speed_min = r.number(p + "speed_min_mps");
        s.speed_max = r.number(p + "speed_max_mps");
        s.interarrival = r.distribution(p + "interarrival_s");
        s.packet_size = r.distribution(p + "packet_size_bits");
        s.sla_rate_bps = r.number(p + "sla_rate_bps");
        s.sla_latency_s = r.number(p + "sla_latency_s");
        if (s.subscribers < 0) throw ConfigError(p + "subscribers must be >= 0");
        if (!(s.speed_min >= 0.0 && s.speed_max >= s.speed_min)) throw ConfigError(p + "speed range is invalid");
        if (!(s.interarrival.mean() > 0.0)) throw ConfigError(p + "interarrival_s must have a positive mean");
        if (!(s.packet_size.min() > 0.0)) throw ConfigError(p + "packet_size_bits must be positive");
        if (!(s.sla_rate_bps > 0.0 && s.sla_latency_s > 0.0)) throw ConfigError(p + "SLA values must be positive");
    }
    if (r.raw("traffic.normalizers") == "auto") {
        e.normalizers.clear();
    } else {
        e.normalizers = r.numbers("traffic.normalizers");
        if (e.normalizers.size() != e.slices.size()) throw ConfigError("traffic.normalizers needs one value per slice");
        for (double v : e.normalizers)
            if (!(v > 0.0)) throw ConfigError("traffic.normalizers must be positive");
    }

    e.link.tx_power_dbm = r.number("link.tx_power_dbm");
    e.link.noise_psd_dbm_hz = r.number("link.noise_psd_dbm_hz");
    e.link.pathloss_const_db = r.number("link.pathloss_const_db");
    e.link.pathloss_slope_db = r.number("link.pathloss_slope_db");
    e.link.d_min_m = r.number("link.min_distance_m");
    e.link.rayleigh = r.boolean("link.rayleigh");
    e.link.shadowing_sigma_db = r.number("link.shadowing_sigma_db");
    e.link.validate();

    e.total_bandwidth_hz = r.number("env.bandwidth_mhz") * 1e6;
    e.delta_hz = r.number("env.delta_mhz") * 1e6;
    if (!(e.total_bandwidth_hz > 0.0 && e.delta_hz > 0.0)) throw ConfigError("env: bandwidth and delta must be positive");
    e.timing.slots = r.integer("env.slots");
    e.timing.slot_s = r.number("env.slot_ms") * 1e-3;
    if (e.timing.slots < 1 || !(e.timing.slot_s > 0.0)) throw ConfigError("env: slot timing must be positive");
    e.weights.alpha = r.number("env.alpha");
    e.weights.beta = r.numbers("env.beta");
    e.weights.c1 = r.number("env.c1");
    e.weights.c2 = r.number("env.c2");
    e.weights.c3 = r.number("env.c3");
    e.weights.gamma = r.number("env.gamma");
    e.weights.validate(e.slices.size());
    action_count(e.total_units(), static_cast<int>(e.slices.size()));

    TrainerConfig& t = x.trainer;
    nn::NetConfig& n = t.learner.net;
    n.demand_dim = static_cast<int>(e.slices.size());
    n.embed = r.integer("learner.embed");
    n.att = r.integer("learner.att");
    n.head_out = r.integer("learner.head_out");
    n.heads = r.integer("learner.heads");
    n.gat_layers = r.integer("learner.gat_layers");
    n.hidden = r.integer("learner.hidden");
    n.tau = r.number("learner.tau");
    n.dueling = r.boolean("learner.dueling");
    t.learner.double_q = r.boolean("learner.double_q");
    t.learner.lr_q = r.number("learner.lr_q");
    t.learner.lr_critic = r.number("learner.lr_critic");
    t.learner.lr_actor = r.number("learner.lr_actor");
    t.learner.entropy_weight = r.number("learner.entropy_weight");
    t.learner.is_truncation = r.number("learner.is_truncation");
    if (t.learner.is_truncation < 0.0) throw ConfigError("learner.is_truncation must be >= 0");
    t.learner.gamma = e.weights.gamma;
    t.batch = r.integer("trainer.batch");
    t.replay_capacity = r.integer("trainer.replay_capacity");
    t.target_sync = r.integer("trainer.target_sync");
    t.epsilon_end = r.number("trainer.epsilon_end");
    t.ramp_fraction = r.number("trainer.ramp_fraction");
    t.validate();
    return cfg;
}

KeyValues parse_ini(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    KeyValues kv;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body) kv[section + "." + key] = value.data();
    }
    return kv;
}

KeyValues read_ini_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_ini(ss.str());
}

KeyValues parse_overrides(std::span<const std::string> overrides) {
    KeyValues kv;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not section.key=value");
        kv[o.substr(0, eq)] = o.substr(eq + 1);
    }
    return kv;
}

RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
    KeyValues kv = path.empty() ? KeyValues{} : read_ini_file(path);
    for (auto& [k, v] : parse_overrides(overrides)) kv[k] = v;
    return from_key_values(kv);
}

std::vector<std::vector<std::string>> expand_sweep(const std::string& sweep_text, std::span<const std::string> vary) {
    std::vector<std::vector<std::string>> combos;
    std::istringstream lines(sweep_text);
    std::string line;
    while (std::getline(lines, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::vector<std::string> combo;
        for (std::string w; words >> w;) {
            if (w.find('=') == std::string::npos) throw ConfigError("sweep entry '" + w + "' is not section.key=value");
            combo.push_back(w);
        }
        if (!combo.empty()) combos.push_back(std::move(combo));
    }
    if (combos.empty()) combos.emplace_back();
    for (const auto& v : vary) {
        const auto eq = v.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--vary '" + v + "' is not section.key=v1|v2|...");
        const std::string key = v.substr(0, eq);
        std::vector<std::vector<std::string>> next;
        for (const auto& combo : combos) {
            for (const auto& value : split(v.substr(eq + 1), '|')) {
                auto c = combo;
                c.push_back(key + "=" + value);
                next.push_back(std::move(c));
            }
        }
        combos = std::move(next);
    }
    return combos;
}

std::string render_run_config(const RunConfig& cfg) {
    std::string out;
    std::string current;
    for (const auto& [key, value] : entries(cfg)) {
        const auto dot = key.rfind('.');
        const std::string section = key.substr(0, dot);
        if (section != current) {
            out += (current.empty() ? "[" : "\n[") + section + "]\n";
            current = section;
        }
        out += key.substr(dot + 1) + " = " + value + "\n";
    }
    return out;
}

} // namespace gatslice
