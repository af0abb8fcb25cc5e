#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "gatslice/rng.hpp"
#include "gatslice/scenario.hpp"
#include "gatslice/traffic.hpp"

namespace gatslice {

/// Downlink link budget. Path loss is log-distance:
/// PL(dB) = pathloss_const_db + pathloss_slope_db * log10(max(d, d_min)).
struct LinkBudget {
    double tx_power_dbm = 30.0;
    double noise_psd_dbm_hz = -174.0;
    double pathloss_const_db = 38.0;
    double pathloss_slope_db = 30.0;
    double d_min_m = 3.0;
    bool rayleigh = true;
    double shadowing_sigma_db = 0.0;  // 0 disables log-normal shadowing

    double tx_power_mw() const;
    double noise_psd_mw_hz() const;
    /// Deterministic linear power gain PL(d)^-1.
    double path_gain(double distance_m) const;
    void validate() const;
};

/// Linear power gain between subscriber and BS. With Rayleigh fading enabled
/// and an RNG supplied, multiplies by an Exponential(1) power fade.
double channel_gain(const LinkBudget& link, Vec2 sub, Vec2 bs, Rng* slot_rng);

/// Exponential(1) fade that depends only on (key, subscriber, slot), so any
/// allocation replayed on the same period sees the same fading.
double rayleigh_fade(std::uint64_t key, int subscriber, int slot);

/// SNR = g P / (N0 w).
double snr(const LinkBudget& link, double gain, double bandwidth_hz);

/// Shannon rate w log2(1 + SNR) in bits/s.
double user_rate(const LinkBudget& link, double gain, double bandwidth_hz);

/// A subscriber attached to the cell for the current period.
struct CellUser {
    int subscriber = 0;
    int slice = 0;
    double mean_gain = 0.0;  // period-average gain (fading averaged out)
};

struct SlotTiming {
    int slots = 2000;
    double slot_s = 0.5e-3;
    double period_s() const { return slots * slot_s; }
};

/// Round-robin position of each slice, kept across periods as the id of the
/// last subscriber served (-1 before the first grant).
struct CellState {
    std::vector<int> last_served;
};

struct ServeEvent {
    int slot = 0;
    int slice = 0;
    int subscriber = 0;
};

struct PeriodMetrics {
    double se = 0.0;
    std::vector<double> ssr;
    double mean_ssr = 0.0;
    std::vector<int> resolved;  // per slice
    std::vector<int> delivered;
    std::vector<int> dropped;
    std::vector<int> successful;
    int queued_at_start = 0;
    int queued_at_end = 0;
};

/// Inputs for one scheduling period of one BS.
struct CellPeriod {
    std::span<const CellUser> users;
    std::span<const double> slice_bandwidth_hz;
    std::span<const SliceProfile> slices;
    double total_bandwidth_hz = 10e6;
    double t0 = 0.0;
    SlotTiming timing;
    std::uint64_t fading_key = 0;
};

/// Simulates all slots of one period for one BS.
///
/// Each slot, every slice independently grants its whole bandwidth to the
/// next subscriber in cyclic id order that has an eligible pending packet
/// (arrived at or before the slot start). The grant drains the subscriber's
/// FIFO queue at the slot's faded Shannon rate, spilling into later packets.
/// A packet whose age at a slot start exceeds its slice latency bound is
/// dropped. A delivered packet succeeds iff its completion latency is within
/// the bound and the mean rate over its served slots reaches the SLA rate.
///
/// `queues` is indexed by subscriber id; packets still pending at the end of
/// the period stay queued. Resolved packets are appended to `resolved_out`
/// when given.
PeriodMetrics run_period(CellState& state, const CellPeriod& in, const LinkBudget& link,
                         std::vector<std::deque<Packet>>& queues, std::vector<Packet>* resolved_out = nullptr,
                         std::vector<ServeEvent>* trace = nullptr);

/// SE_m = sum of per-user rates at their slice bandwidth / W.
double spectral_efficiency(std::span<const CellUser> users, std::span<const double> slice_bandwidth_hz,
                           const LinkBudget& link, double total_bandwidth_hz);

/// Fraction of resolved packets meeting the SLA; 1 for an empty set.
double slice_ssr(std::span<const Packet> packets);

} // namespace gatslice
