#include "gatslice/radio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gatslice/error.hpp"

namespace gatslice {

double LinkBudget::tx_power_mw() const { return std::pow(10.0, tx_power_dbm / 10.0); }
double LinkBudget::noise_psd_mw_hz() const { return std::pow(10.0, noise_psd_dbm_hz / 10.0); }

double LinkBudget::path_gain(double distance_m) const {
    const double d = std::max(distance_m, d_min_m);
    const double pl_db = pathloss_const_db + pathloss_slope_db * std::log10(d);
    return std::pow(10.0, -pl_db / 10.0);
}

void LinkBudget::validate() const {
    if (!(noise_psd_dbm_hz < 0.0)) throw ConfigError("link: noise PSD must be < 0 dBm/Hz");
    if (!std::isfinite(tx_power_dbm)) throw ConfigError("link: tx power must be finite");
    if (!(d_min_m > 0.0)) throw ConfigError("link: d_min must be > 0");
    if (shadowing_sigma_db < 0.0) throw ConfigError("link: shadowing sigma must be >= 0");
}

double channel_gain(const LinkBudget& link, Vec2 sub, Vec2 bs, Rng* slot_rng) {
    double g = link.path_gain(distance(sub, bs));
    if (link.rayleigh && slot_rng) g *= slot_rng->exponential(1.0);
    return g;
}

double rayleigh_fade(std::uint64_t key, int subscriber, int slot) {
    const std::uint64_t h =
        mix64(key ^ mix64((static_cast<std::uint64_t>(subscriber) << 32) ^ static_cast<std::uint32_t>(slot)));
    return -std::log1p(-to_unit(h));
}

double snr(const LinkBudget& link, double gain, double bandwidth_hz) {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("snr: bandwidth must be > 0");
    return gain * link.tx_power_mw() / (link.noise_psd_mw_hz() * bandwidth_hz);
}

double user_rate(const LinkBudget& link, double gain, double bandwidth_hz) {
    return bandwidth_hz * std::log2(1.0 + snr(link, gain, bandwidth_hz));
}

double spectral_efficiency(std::span<const CellUser> users, std::span<const double> slice_bandwidth_hz,
                           const LinkBudget& link, double total_bandwidth_hz) {
    double sum = 0.0;
    for (const auto& u : users)
        sum += user_rate(link, u.mean_gain, slice_bandwidth_hz[static_cast<std::size_t>(u.slice)]);
    return sum / total_bandwidth_hz;
}

double slice_ssr(std::span<const Packet> packets) {
    if (packets.empty()) return 1.0;
    std::size_t ok = 0;
    for (const auto& p : packets)
        if (p.success) ++ok;
    return static_cast<double>(ok) / static_cast<double>(packets.size());
}

namespace {

constexpr double kTimeEps = 1e-12;

struct Tally {
    std::vector<int> resolved, delivered, dropped, successful;
    explicit Tally(std::size_t n) : resolved(n, 0), delivered(n, 0), dropped(n, 0), successful(n, 0) {}
};

void resolve(Packet&& p, Tally& tally, std::vector<Packet>* out) {
    const auto n = static_cast<std::size_t>(p.slice);
    ++tally.resolved[n];
    if (p.status == PacketStatus::delivered) ++tally.delivered[n];
    if (p.status == PacketStatus::dropped) ++tally.dropped[n];
    if (p.success) ++tally.successful[n];
    if (out) out->push_back(std::move(p));
}

// Drops expired packets at the head of a queue (queues are in arrival order,
// so expired packets are always a prefix of the eligible ones).
void drop_expired(std::deque<Packet>& q, double now, double latency, Tally& tally, std::vector<Packet>* out) {
    while (!q.empty() && q.front().arrival_time <= now && now - q.front().arrival_time > latency + kTimeEps) {
        Packet p = std::move(q.front());
        q.pop_front();
        p.status = PacketStatus::dropped;
        p.success = false;
        resolve(std::move(p), tally, out);
    }
}

} // namespace

PeriodMetrics run_period(CellState& state, const CellPeriod& in, const LinkBudget& link,
                         std::vector<std::deque<Packet>>& queues, std::vector<Packet>* resolved_out,
                         std::vector<ServeEvent>* trace) {
    const std::size_t num_slices = in.slices.size();
    if (in.slice_bandwidth_hz.size() != num_slices)
        throw std::invalid_argument("run_period: one bandwidth per slice required");
    double w_sum = 0.0;
    for (double w : in.slice_bandwidth_hz) w_sum += w;
    if (w_sum > in.total_bandwidth_hz * (1.0 + 1e-12))
        throw std::invalid_argument("run_period: slice bandwidths exceed total bandwidth");
    if (state.last_served.size() != num_slices) state.last_served.assign(num_slices, -1);

    // Users per slice in ascending subscriber id (the cyclic order).
    std::vector<std::vector<const CellUser*>> by_slice(num_slices);
    for (const auto& u : in.users) by_slice.at(static_cast<std::size_t>(u.slice)).push_back(&u);
    for (auto& v : by_slice)
        std::sort(v.begin(), v.end(), [](const CellUser* a, const CellUser* b) { return a->subscriber < b->subscriber; });

    PeriodMetrics m;
    for (const auto& u : in.users) m.queued_at_start += static_cast<int>(queues.at(static_cast<std::size_t>(u.subscriber)).size());

    Tally tally(num_slices);
    const double slot = in.timing.slot_s;
    // Earliest head-of-queue arrival per slice; slots before it cannot serve
    // or drop anything, so the scan is skipped.
    std::vector<double> wake(num_slices, -std::numeric_limits<double>::infinity());
    auto next_wake = [&](std::size_t n) {
        double t = std::numeric_limits<double>::infinity();
        for (const CellUser* u : by_slice[n]) {
            const auto& q = queues[static_cast<std::size_t>(u->subscriber)];
            if (!q.empty()) t = std::min(t, q.front().arrival_time);
        }
        return t;
    };

    for (int s = 0; s < in.timing.slots; ++s) {
        const double ts = in.t0 + s * slot;
        const double te = ts + slot;
        for (std::size_t n = 0; n < num_slices; ++n) {
            const auto& users = by_slice[n];
            if (users.empty() || wake[n] > ts) continue;
            const auto& prof = in.slices[n];
            const double w = in.slice_bandwidth_hz[n];

            std::size_t start = 0;
            while (start < users.size() && users[start]->subscriber <= state.last_served[n]) ++start;

            for (std::size_t k = 0; k < users.size(); ++k) {
                const CellUser& u = *users[(start + k) % users.size()];
                auto& q = queues[static_cast<std::size_t>(u.subscriber)];
                drop_expired(q, ts, prof.sla_latency_s, tally, resolved_out);
                if (q.empty() || q.front().arrival_time > ts) continue;

                if (!(w > 0.0)) throw std::invalid_argument("run_period: slice with pending traffic has zero bandwidth");
                const double fade = link.rayleigh ? rayleigh_fade(in.fading_key, u.subscriber, s) : 1.0;
                const double rate = user_rate(link, u.mean_gain * fade, w);
                double budget = rate * slot;
                if (trace) trace->push_back({s, static_cast<int>(n), u.subscriber});

                while (!q.empty() && q.front().arrival_time <= ts) {
                    Packet& p = q.front();
                    ++p.served_slots;
                    p.served_rate_sum += rate;
                    const double need = p.size_bits - p.delivered_bits;
                    if (budget >= need) {
                        budget -= need;
                        p.delivered_bits = p.size_bits;
                        p.completion_time = te;
                        p.status = PacketStatus::delivered;
                        const double mean_rate = p.served_rate_sum / p.served_slots;
                        p.success = (te - p.arrival_time <= prof.sla_latency_s + kTimeEps) && mean_rate >= prof.sla_rate_bps;
                        Packet done = std::move(p);
                        q.pop_front();
                        resolve(std::move(done), tally, resolved_out);
                    } else {
                        p.delivered_bits += budget;
                        budget = 0.0;
                        break;
                    }
                }
                state.last_served[n] = u.subscriber;
                break;
            }
            wake[n] = next_wake(n);
        }
    }

    const double t_end = in.t0 + in.timing.period_s();
    for (const auto& u : in.users) {
        auto& q = queues[static_cast<std::size_t>(u.subscriber)];
        drop_expired(q, t_end, in.slices[static_cast<std::size_t>(u.slice)].sla_latency_s, tally, resolved_out);
        m.queued_at_end += static_cast<int>(q.size());
    }

    m.resolved = tally.resolved;
    m.delivered = tally.delivered;
    m.dropped = tally.dropped;
    m.successful = tally.successful;
    m.ssr.assign(num_slices, 1.0);
    double sum = 0.0;
    for (std::size_t n = 0; n < num_slices; ++n) {
        if (tally.resolved[n] > 0) m.ssr[n] = static_cast<double>(tally.successful[n]) / tally.resolved[n];
        sum += m.ssr[n];
    }
    m.mean_ssr = num_slices ? sum / static_cast<double>(num_slices) : 1.0;
    m.se = spectral_efficiency(in.users, in.slice_bandwidth_hz, link, in.total_bandwidth_hz);
    return m;
}

} // namespace gatslice
