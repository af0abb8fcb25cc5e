#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gatslice/rng.hpp"
#include "gatslice/scenario.hpp"

namespace gatslice {

/// Scalar distribution used for inter-arrival times (seconds) and packet
/// sizes (bits).
class Distribution {
public:
    enum class Kind { constant, uniform, exponential, truncated_pareto, choice };

    static Distribution constant(double value);
    static Distribution uniform(double lo, double hi);
    static Distribution exponential(double mean);
    /// Pareto with the given tail exponent, truncated at `max`; the lower
    /// bound is solved numerically so that the truncated mean equals `mean`.
    static Distribution truncated_pareto(double exponent, double mean, double max);
    static Distribution choice(std::vector<double> values);

    double sample(Rng& rng) const;
    double mean() const;
    double min() const;
    double max() const;  // +inf for exponential

    Kind kind() const { return kind_; }
    double pareto_lower() const { return lo_; }
    double pareto_exponent() const { return shape_; }
    const std::vector<double>& values() const { return values_; }

    /// Round-trippable text form, e.g. "truncated_pareto(1.2,0.006,0.0125)".
    std::string describe() const;
    static Distribution parse(const std::string& text);

private:
    Kind kind_ = Kind::constant;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double shape_ = 0.0;
    double mean_ = 0.0;
    std::vector<double> values_;
};

/// Mean of a Pareto(exponent, lower) truncated to [lower, max].
double truncated_pareto_mean(double exponent, double lower, double max);

/// Traffic and SLA description of one slice.
struct SliceProfile {
    std::string name;
    int subscribers = 0;
    double speed_min = 0.0;
    double speed_max = 0.0;
    Distribution interarrival;  // seconds
    Distribution packet_size;   // bits
    double sla_rate_bps = 0.0;
    double sla_latency_s = 0.0;

    /// Expected offered load of one subscriber in bits/s.
    double mean_load_bps() const { return packet_size.mean() / interarrival.mean(); }
};

/// VoLTE, eMBB and URLLC exactly as tabulated for the reference scenario.
std::vector<SliceProfile> reference_slice_profiles();

std::vector<MobilityProfile> mobility_profiles(std::span<const SliceProfile> slices);

double sample_interarrival(const SliceProfile& slice, Rng& rng);
double sample_packet_size(const SliceProfile& slice, Rng& rng);

enum class PacketStatus { pending, delivered, dropped };

struct Packet {
    int owner = 0;
    int slice = 0;
    int bs = -1;  // serving BS when the packet arrived
    double size_bits = 0.0;
    double arrival_time = 0.0;
    double delivered_bits = 0.0;
    std::optional<double> completion_time;
    PacketStatus status = PacketStatus::pending;
    int served_slots = 0;
    double served_rate_sum = 0.0;  // sum of per-slot rates over served slots
    bool success = false;          // SLA indicator, set when resolved
};

/// Per-subscriber arrival processes with residual inter-arrival time carried
/// across periods. Each subscriber owns an independent stream seeded from
/// (seed, subscriber id).
class TrafficGenerator {
public:
    TrafficGenerator() = default;
    TrafficGenerator(std::vector<SliceProfile> slices, std::span<const Subscriber> subs, std::uint64_t seed,
                     double start_time = 0.0);

    /// Packets arriving in [t0, t0 + period) for every subscriber, in
    /// subscriber order then arrival order. `association` gives each
    /// subscriber's serving BS and is stamped into Packet::bs.
    std::vector<Packet> generate_period(double t0, double period, std::span<const int> association);

    double next_arrival(std::size_t subscriber) const { return streams_.at(subscriber).next_arrival; }

private:
    struct Stream {
        int slice = 0;
        Rng rng;
        double next_arrival = 0.0;
    };
    std::vector<SliceProfile> slices_;
    std::vector<Stream> streams_;
    std::size_t last_count_ = 0;  // packets in the previous period, to presize the next
};

/// d_mn = bits arrived for slice n at BS m / normalizer_n.
std::vector<double> demand_vector(std::span<const Packet> packets, int bs, std::span<const double> normalizers);

/// Default normalizers: mean per-subscriber offered load x period x expected
/// subscribers per BS.
std::vector<double> default_normalizers(std::span<const SliceProfile> slices, int num_bs, double period);

} // namespace gatslice
