#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "gatslice/radio.hpp"
#include "gatslice/scenario.hpp"
#include "gatslice/traffic.hpp"

namespace gatslice {

struct ScenarioConfig {
    Arena arena{160.0, 160.0};
    int rings = 2;
    double inter_site_distance = 36.0;
    double neighbor_radius_factor = 1.1;  // radius = factor x inter-site distance
    double corner_fraction = 0.25;
};

struct UtilityWeights {
    double alpha = 0.01;
    std::vector<double> beta{1.0, 1.0, 1.0};
    double c1 = 6.0;
    double c2 = 2.0;
    double c3 = 0.9;
    double gamma = 0.9;

    void validate(std::size_t num_slices) const;
};

/// J = alpha SE + sum_n beta_n SSR_n.
double compute_utility(double se, std::span<const double> ssr, const UtilityWeights& w);

struct RewardValue {
    double value = 0.0;
    bool clipped = false;
};

/// J / c1 when mean SSR >= c3, mean SSR / c2 otherwise; clipped to [0, 1].
RewardValue reward(double utility, double mean_ssr, const UtilityWeights& w);

/// Number of compositions of `units` into `slices` positive parts.
std::uint64_t action_count(int units, int slices);

/// Bijection between action indices and unit compositions (c_1..c_N), each
/// c_n >= 1 and sum c_n = U, in lexicographic order.
class ActionCodec {
public:
    ActionCodec() = default;
    ActionCodec(int units, int slices);

    int units() const { return units_; }
    int slices() const { return slices_; }
    int size() const { return static_cast<int>(table_.size()); }

    int encode(std::span<const int> composition) const;
    const std::vector<int>& decode(int index) const;

private:
    int units_ = 0;
    int slices_ = 0;
    std::vector<std::vector<int>> table_;
};

/// Equal split of U units, remainder to the lowest slice indices.
std::vector<int> hard_slicing_units(int units, int slices);

struct EnvConfig {
    ScenarioConfig scenario;
    std::vector<SliceProfile> slices = reference_slice_profiles();
    LinkBudget link;
    double total_bandwidth_hz = 10e6;
    double delta_hz = 0.54e6;
    SlotTiming timing;
    UtilityWeights weights;
    std::vector<double> normalizers;  // empty: default_normalizers()

    int total_units() const;
};

struct Observation {
    std::vector<double> prev;  // d^{t-1}
    std::vector<double> cur;   // d^t
};

struct BsReport {
    int bs = 0;
    int action = 0;
    std::vector<int> units;
    std::vector<double> demand;  // demand that arrived during this period
    PeriodMetrics metrics;
    double utility = 0.0;
    double reward = 0.0;
    bool reward_clipped = false;
    int handovers = 0;  // subscribers that attached to this BS this period
};

struct StepResult {
    std::vector<Observation> observations;
    std::vector<double> rewards;
    std::vector<BsReport> reports;
};

/// The multi-BS slicing environment. One agent per BS; one step is one
/// slice-band adjustment period.
class SlicingEnv {
public:
    explicit SlicingEnv(EnvConfig config);

    /// Fresh scenario from `seed`. Runs one warm-up period under hard slicing
    /// so the initial observation carries d^0; d^{-1} is zero.
    std::vector<Observation> reset(std::uint64_t seed);

    StepResult step(std::span<const int> actions);

    const EnvConfig& config() const { return config_; }
    const ActionCodec& codec() const { return codec_; }
    const NeighborGraph& graph() const { return graph_; }
    const std::vector<BaseStation>& base_stations() const { return bss_; }
    const std::vector<Subscriber>& subscribers() const { return subs_; }
    const std::vector<int>& association() const { return association_; }
    const std::vector<double>& normalizers() const { return normalizers_; }
    int num_agents() const { return static_cast<int>(bss_.size()); }
    int num_slices() const { return static_cast<int>(config_.slices.size()); }
    int hard_action() const { return hard_action_; }
    int period() const { return period_; }
    std::uint64_t seed() const { return seed_; }
    long clip_count() const { return clip_count_; }

    /// Observations as of the last reset/step.
    std::vector<Observation> observations() const;
    /// Packets queued but not yet resolved, over all subscribers.
    std::size_t pending_packets() const;

private:
    StepResult simulate_period(std::span<const int> actions);

    EnvConfig config_;
    ActionCodec codec_;
    int hard_action_ = 0;
    std::vector<double> normalizers_;

    std::uint64_t seed_ = 0;
    int period_ = 0;
    long clip_count_ = 0;
    std::vector<BaseStation> bss_;
    NeighborGraph graph_;
    std::vector<Subscriber> subs_;
    std::vector<int> association_;
    TrafficGenerator traffic_;
    std::vector<std::deque<Packet>> queues_;
    std::vector<CellState> cells_;
    std::vector<std::vector<double>> prev_demand_;
    std::vector<std::vector<double>> cur_demand_;
};

} // namespace gatslice
