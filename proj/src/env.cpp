#include "gatslice/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gatslice/error.hpp"

namespace gatslice {

void UtilityWeights::validate(std::size_t num_slices) const {
    if (!(alpha > 0.0)) throw ConfigError("weights: alpha must be > 0");
    if (beta.size() != num_slices)
        throw ConfigError("weights: beta needs " + std::to_string(num_slices) + " entries");
    for (double b : beta)
        if (!(b >= 0.0)) throw ConfigError("weights: beta entries must be >= 0");
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("weights: c1 and c2 must be > 0");
    if (!(c3 > 0.0 && c3 <= 1.0)) throw ConfigError("weights: c3 must be in (0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("weights: gamma must be in (0, 1]");
}

double compute_utility(double se, std::span<const double> ssr, const UtilityWeights& w) {
    if (ssr.size() != w.beta.size()) throw std::invalid_argument("utility: ssr/beta size mismatch");
    double j = w.alpha * se;
    for (std::size_t n = 0; n < ssr.size(); ++n) j += w.beta[n] * ssr[n];
    return j;
}

RewardValue reward(double utility, double mean_ssr, const UtilityWeights& w) {
    const double raw = mean_ssr >= w.c3 ? utility / w.c1 : mean_ssr / w.c2;
    const double clamped = std::clamp(raw, 0.0, 1.0);
    return {clamped, clamped != raw};
}

std::uint64_t action_count(int units, int slices) {
    if (slices < 1 || units < slices) throw ConfigError("action space: need U >= N >= 1");
    // C(U-1, N-1)
    const std::uint64_t n = static_cast<std::uint64_t>(units - 1);
    std::uint64_t k = static_cast<std::uint64_t>(slices - 1);
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

ActionCodec::ActionCodec(int units, int slices) : units_(units), slices_(slices) {
    const auto count = action_count(units, slices);
    if (count > 5'000'000) throw ConfigError("action space too large to tabulate");
    table_.reserve(count);
    std::vector<int> c(static_cast<std::size_t>(slices), 1);
    // Lexicographic enumeration: the last part absorbs the remainder.
    auto emit = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == slices - 1) {
            c[static_cast<std::size_t>(pos)] = remaining;
            table_.push_back(c);
            return;
        }
        const int parts_after = slices - pos - 1;
        for (int v = 1; v <= remaining - parts_after; ++v) {
            c[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    emit(emit, 0, units);
}

int ActionCodec::encode(std::span<const int> comp) const {
    if (static_cast<int>(comp.size()) != slices_) throw std::invalid_argument("encode: wrong number of slices");
    int sum = 0;
    for (int v : comp) {
        if (v < 1) throw std::invalid_argument("encode: every slice needs at least one unit");
        sum += v;
    }
    if (sum != units_) throw std::invalid_argument("encode: units do not sum to U");
    std::uint64_t rank = 0;
    int remaining = units_;
    for (int pos = 0; pos + 1 < slices_; ++pos) {
        const int parts_after = slices_ - pos - 1;
        for (int v = 1; v < comp[static_cast<std::size_t>(pos)]; ++v) rank += action_count(remaining - v, parts_after);
        remaining -= comp[static_cast<std::size_t>(pos)];
    }
    return static_cast<int>(rank);
}

const std::vector<int>& ActionCodec::decode(int index) const {
    if (index < 0 || index >= size()) throw std::out_of_range("decode: action index " + std::to_string(index));
    return table_[static_cast<std::size_t>(index)];
}

std::vector<int> hard_slicing_units(int units, int slices) {
    std::vector<int> out(static_cast<std::size_t>(slices), units / slices);
    for (int i = 0; i < units % slices; ++i) ++out[static_cast<std::size_t>(i)];
    return out;
}

int EnvConfig::total_units() const {
    if (!(delta_hz > 0.0)) throw ConfigError("delta must be > 0");
    // Guard against 10e6 / 0.18e6 landing just below an integer.
    return static_cast<int>(std::floor(total_bandwidth_hz / delta_hz + 1e-9));
}

SlicingEnv::SlicingEnv(EnvConfig config) : config_(std::move(config)) {
    const int n = static_cast<int>(config_.slices.size());
    if (n < 1) throw ConfigError("env: at least one slice required");
    config_.weights.validate(config_.slices.size());
    config_.link.validate();
    if (config_.timing.slots <= 0 || !(config_.timing.slot_s > 0.0)) throw ConfigError("env: bad slot timing");
    codec_ = ActionCodec(config_.total_units(), n);
    hard_action_ = codec_.encode(hard_slicing_units(codec_.units(), n));
    bss_ = build_hex_layout(config_.scenario.rings, config_.scenario.inter_site_distance, config_.scenario.arena);
    graph_ = build_neighbor_graph(bss_, config_.scenario.neighbor_radius_factor * config_.scenario.inter_site_distance);
    normalizers_ = config_.normalizers.empty()
                       ? default_normalizers(config_.slices, static_cast<int>(bss_.size()), config_.timing.period_s())
                       : config_.normalizers;
    if (normalizers_.size() != config_.slices.size()) throw ConfigError("env: one normalizer per slice required");
    for (double z : normalizers_)
        if (!(z > 0.0)) throw ConfigError("env: normalizers must be > 0");
}

std::vector<Observation> SlicingEnv::reset(std::uint64_t seed) {
    seed_ = seed;
    period_ = 0;
    clip_count_ = 0;
    Rng spawn_rng(derive_seed(seed, {0x5350ULL}));
    const auto mob = mobility_profiles(config_.slices);
    subs_ = spawn_subscribers(mob, config_.scenario.arena, config_.scenario.corner_fraction, spawn_rng);
    association_ = associate(subs_, bss_);
    traffic_ = TrafficGenerator(config_.slices, subs_, derive_seed(seed, {0x5452ULL}));
    queues_.assign(subs_.size(), {});
    cells_.assign(bss_.size(), CellState{});
    const auto zero = std::vector<double>(config_.slices.size(), 0.0);
    prev_demand_.assign(bss_.size(), zero);
    cur_demand_.assign(bss_.size(), zero);

    // Warm-up period [0, T) under hard slicing provides d^0.
    std::vector<int> hard(bss_.size(), hard_action_);
    simulate_period(hard);
    for (auto& d : prev_demand_) d = zero;
    return observations();
}

StepResult SlicingEnv::step(std::span<const int> actions) {
    if (subs_.empty() && bss_.empty()) throw std::logic_error("env: step before reset");
    if (actions.size() != bss_.size())
        throw std::invalid_argument("env: expected " + std::to_string(bss_.size()) + " actions, got " +
                                    std::to_string(actions.size()));
    for (int a : actions)
        if (a < 0 || a >= codec_.size()) throw std::invalid_argument("env: action index out of range");
    ++period_;
    const double dt = config_.timing.period_s();
    advance_mobility(subs_, config_.scenario.arena, dt);
    return simulate_period(actions);
}

StepResult SlicingEnv::simulate_period(std::span<const int> actions) {
    const std::size_t num_bs = bss_.size();
    const std::size_t num_slices = config_.slices.size();
    const double period = config_.timing.period_s();
    const double t0 = period_ * period;

    std::vector<int> old_assoc = association_;
    association_ = associate(subs_, bss_);
    std::vector<int> handovers(num_bs, 0);
    if (period_ > 0) {
        for (std::size_t u = 0; u < subs_.size(); ++u)
            if (association_[u] != old_assoc[u]) ++handovers[static_cast<std::size_t>(association_[u])];
    }

    auto packets = traffic_.generate_period(t0, period, association_);
    std::vector<std::vector<double>> demand(num_bs, std::vector<double>(num_slices, 0.0));
    for (const auto& p : packets)
        demand[static_cast<std::size_t>(p.bs)][static_cast<std::size_t>(p.slice)] += p.size_bits;
    for (auto& d : demand)
        for (std::size_t n = 0; n < num_slices; ++n) d[n] /= normalizers_[n];
    for (auto& p : packets) queues_[static_cast<std::size_t>(p.owner)].push_back(std::move(p));

    std::vector<std::vector<CellUser>> cell_users(num_bs);
    const bool shadowing = config_.link.shadowing_sigma_db > 0.0;
    for (std::size_t u = 0; u < subs_.size(); ++u) {
        const auto m = static_cast<std::size_t>(association_[u]);
        double g = config_.link.path_gain(distance(subs_[u].position, bss_[m].position));
        if (shadowing) {
            Rng sh(derive_seed(seed_, {0x5348ULL, static_cast<std::uint64_t>(period_), u}));
            g *= std::pow(10.0, config_.link.shadowing_sigma_db * sh.normal() / 10.0);
        }
        cell_users[m].push_back({subs_[u].id, subs_[u].slice, g});
    }

    const std::uint64_t fading_key = derive_seed(seed_, {0x4641ULL, static_cast<std::uint64_t>(period_)});
    StepResult out;
    out.reports.resize(num_bs);
    out.rewards.resize(num_bs);
    for (std::size_t m = 0; m < num_bs; ++m) {
        const auto& units = codec_.decode(actions[m]);
        std::vector<double> w(num_slices);
        for (std::size_t n = 0; n < num_slices; ++n) w[n] = units[n] * config_.delta_hz;

        CellPeriod in;
        in.users = cell_users[m];
        in.slice_bandwidth_hz = w;
        in.slices = config_.slices;
        in.total_bandwidth_hz = config_.total_bandwidth_hz;
        in.t0 = t0;
        in.timing = config_.timing;
        in.fading_key = fading_key;

        auto& rep = out.reports[m];
        rep.bs = static_cast<int>(m);
        rep.action = actions[m];
        rep.units = units;
        rep.demand = demand[m];
        rep.metrics = run_period(cells_[m], in, config_.link, queues_);
        rep.utility = compute_utility(rep.metrics.se, rep.metrics.ssr, config_.weights);
        const auto r = reward(rep.utility, rep.metrics.mean_ssr, config_.weights);
        rep.reward = r.value;
        rep.reward_clipped = r.clipped;
        if (r.clipped && period_ > 0) ++clip_count_;
        rep.handovers = handovers[m];
        out.rewards[m] = r.value;
    }

    prev_demand_ = std::move(cur_demand_);
    cur_demand_ = std::move(demand);
    out.observations = observations();
    return out;
}

std::vector<Observation> SlicingEnv::observations() const {
    std::vector<Observation> out(bss_.size());
    for (std::size_t m = 0; m < bss_.size(); ++m) out[m] = {prev_demand_[m], cur_demand_[m]};
    return out;
}

std::size_t SlicingEnv::pending_packets() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
}

} // namespace gatslice
