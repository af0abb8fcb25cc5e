#include "gatslice/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gatslice/error.hpp"
#include "gatslice/format.hpp"

namespace gatslice {

double truncated_pareto_mean(double a, double lower, double max) {
    const double ratio = std::pow(lower / max, a);
    const double norm = 1.0 - ratio;
    if (std::abs(a - 1.0) < 1e-12) return lower * std::log(max / lower) / norm;
    return a * std::pow(lower, a) * (std::pow(lower, 1.0 - a) - std::pow(max, 1.0 - a)) / ((a - 1.0) * norm);
}

Distribution Distribution::constant(double value) {
    Distribution d;
    d.kind_ = Kind::constant;
    d.lo_ = d.hi_ = d.mean_ = value;
    return d;
}

Distribution Distribution::uniform(double lo, double hi) {
    if (!(hi >= lo)) throw ConfigError("uniform distribution needs hi >= lo");
    Distribution d;
    d.kind_ = Kind::uniform;
    d.lo_ = lo;
    d.hi_ = hi;
    d.mean_ = 0.5 * (lo + hi);
    return d;
}

Distribution Distribution::exponential(double mean) {
    if (!(mean > 0.0)) throw ConfigError("exponential distribution needs mean > 0");
    Distribution d;
    d.kind_ = Kind::exponential;
    d.mean_ = mean;
    d.lo_ = 0.0;
    d.hi_ = std::numeric_limits<double>::infinity();
    return d;
}

Distribution Distribution::truncated_pareto(double exponent, double mean, double max) {
    if (!(exponent > 0.0) || !(mean > 0.0) || !(max > mean))
        throw ConfigError("truncated pareto needs exponent > 0 and 0 < mean < max");
    // The truncated mean increases monotonically with the lower bound, from 0
    // (lower -> 0, exponent > 1) up to max (lower -> max).
    double lo = max * 1e-12;
    double hi = max;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (truncated_pareto_mean(exponent, mid, max) < mean)
            lo = mid;
        else
            hi = mid;
    }
    Distribution d;
    d.kind_ = Kind::truncated_pareto;
    d.shape_ = exponent;
    d.lo_ = 0.5 * (lo + hi);
    d.hi_ = max;
    d.mean_ = mean;
    return d;
}

Distribution Distribution::choice(std::vector<double> values) {
    if (values.empty()) throw ConfigError("choice distribution needs at least one value");
    Distribution d;
    d.kind_ = Kind::choice;
    d.lo_ = *std::min_element(values.begin(), values.end());
    d.hi_ = *std::max_element(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    d.mean_ = s / static_cast<double>(values.size());
    d.values_ = std::move(values);
    return d;
}

double Distribution::sample(Rng& rng) const {
    switch (kind_) {
    case Kind::constant:
        return lo_;
    case Kind::uniform:
        return rng.uniform(lo_, hi_);
    case Kind::exponential:
        return rng.exponential(mean_);
    case Kind::truncated_pareto: {
        // Inverse CDF of the truncated law.
        const double u = rng.uniform01();
        const double tail = std::pow(lo_ / hi_, shape_);
        const double x = lo_ / std::pow(1.0 - u * (1.0 - tail), 1.0 / shape_);
        return std::min(x, hi_);
    }
    case Kind::choice:
        return values_[rng.index(values_.size())];
    }
    return 0.0;
}

double Distribution::mean() const { return mean_; }
double Distribution::min() const { return lo_; }
double Distribution::max() const { return hi_; }

std::string Distribution::describe() const {
    switch (kind_) {
    case Kind::constant: return "constant(" + format_number(lo_) + ")";
    case Kind::uniform: return "uniform(" + format_number(lo_) + "," + format_number(hi_) + ")";
    case Kind::exponential: return "exponential(" + format_number(mean_) + ")";
    case Kind::truncated_pareto:
        return "truncated_pareto(" + format_number(shape_) + "," + format_number(mean_) + "," + format_number(hi_) + ")";
    case Kind::choice: {
        std::string out = "choice(";
        for (std::size_t i = 0; i < values_.size(); ++i) out += (i ? "," : "") + format_number(values_[i]);
        return out + ")";
    }
    }
    return {};
}

Distribution Distribution::parse(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ConfigError("bad distribution '" + text + "'");
    std::string name = text.substr(0, open);
    name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
    std::vector<double> args;
    std::stringstream ss(text.substr(open + 1, close - open - 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            args.push_back(std::stod(tok, &used));
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + tok + "' in distribution '" + text + "'");
        }
    }
    auto need = [&](std::size_t n) {
        if (args.size() != n) throw ConfigError("distribution '" + text + "' expects " + std::to_string(n) + " args");
    };
    if (name == "constant") {
        need(1);
        return constant(args[0]);
    }
    if (name == "uniform") {
        need(2);
        return uniform(args[0], args[1]);
    }
    if (name == "exponential") {
        need(1);
        return exponential(args[0]);
    }
    if (name == "truncated_pareto") {
        need(3);
        return truncated_pareto(args[0], args[1], args[2]);
    }
    if (name == "choice") return choice(std::move(args));
    throw ConfigError("unknown distribution '" + name + "'");
}

std::vector<SliceProfile> reference_slice_profiles() {
    constexpr double byte = 8.0;
    constexpr double mbyte = 8.0e6;
    std::vector<SliceProfile> out(3);
    out[0] = {"volte", 333, 1.0, 5.0, Distribution::uniform(0.0, 0.160), Distribution::constant(40 * byte),
              51e3, 0.010};
    out[1] = {"embb", 667, 1.0, 3.0, Distribution::truncated_pareto(1.2, 0.006, 0.0125),
              Distribution::truncated_pareto(1.2, 100 * byte, 250 * byte), 100e6, 0.010};
    out[2] = {"urllc", 1000, 6.0, 10.0, Distribution::exponential(0.180),
              Distribution::choice({0.3 * mbyte, 0.4 * mbyte, 0.5 * mbyte, 0.6 * mbyte, 0.7 * mbyte}), 10e6, 0.003};
    return out;
}

std::vector<MobilityProfile> mobility_profiles(std::span<const SliceProfile> slices) {
    std::vector<MobilityProfile> out;
    for (const auto& s : slices) out.push_back({s.subscribers, s.speed_min, s.speed_max});
    return out;
}

double sample_interarrival(const SliceProfile& slice, Rng& rng) { return slice.interarrival.sample(rng); }
double sample_packet_size(const SliceProfile& slice, Rng& rng) { return slice.packet_size.sample(rng); }

TrafficGenerator::TrafficGenerator(std::vector<SliceProfile> slices, std::span<const Subscriber> subs,
                                   std::uint64_t seed, double start_time)
    : slices_(std::move(slices)) {
    streams_.reserve(subs.size());
    for (const auto& s : subs) {
        if (s.slice < 0 || static_cast<std::size_t>(s.slice) >= slices_.size())
            throw std::invalid_argument("traffic: subscriber slice out of range");
        Stream st{s.slice, Rng(derive_seed(seed, {0x7261ULL, static_cast<std::uint64_t>(s.id)})), 0.0};
        st.next_arrival = start_time + sample_interarrival(slices_[static_cast<std::size_t>(s.slice)], st.rng);
        streams_.push_back(std::move(st));
    }
}

std::vector<Packet> TrafficGenerator::generate_period(double t0, double period, std::span<const int> association) {
    if (association.size() != streams_.size())
        throw std::invalid_argument("traffic: association size does not match subscribers");
    const double t1 = t0 + period;
    std::vector<Packet> out;
    out.reserve(last_count_ + last_count_ / 8);
    for (std::size_t u = 0; u < streams_.size(); ++u) {
        auto& st = streams_[u];
        const auto& prof = slices_[static_cast<std::size_t>(st.slice)];
        // Arrivals scheduled before t0 belong to an earlier period that was
        // not generated (only possible when the caller skips periods).
        while (st.next_arrival < t0) st.next_arrival += sample_interarrival(prof, st.rng);
        while (st.next_arrival < t1) {
            Packet p;
            p.owner = static_cast<int>(u);
            p.slice = st.slice;
            p.bs = association[u];
            p.arrival_time = st.next_arrival;
            p.size_bits = sample_packet_size(prof, st.rng);
            out.push_back(p);
            st.next_arrival += sample_interarrival(prof, st.rng);
        }
    }
    last_count_ = out.size();
    return out;
}

std::vector<double> demand_vector(std::span<const Packet> packets, int bs, std::span<const double> normalizers) {
    for (double z : normalizers)
        if (!(z > 0.0)) throw ConfigError("demand normalizers must be > 0");
    std::vector<double> d(normalizers.size(), 0.0);
    for (const auto& p : packets) {
        if (p.bs != bs) continue;
        d.at(static_cast<std::size_t>(p.slice)) += p.size_bits;
    }
    for (std::size_t n = 0; n < d.size(); ++n) d[n] /= normalizers[n];
    return d;
}

std::vector<double> default_normalizers(std::span<const SliceProfile> slices, int num_bs, double period) {
    if (num_bs <= 0) throw ConfigError("normalizers: need at least one BS");
    std::vector<double> out;
    for (const auto& s : slices) {
        const double per_bs = std::max(1.0, static_cast<double>(s.subscribers) / num_bs);
        out.push_back(s.mean_load_bps() * period * per_bs);
    }
    return out;
}

} // namespace gatslice
