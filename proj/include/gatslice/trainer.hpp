#pragma once

// Warmup, epsilon-greedy interaction, replay and updates for one learner
// per BS, plus the experiment runner that drives the slicing environment.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatslice/env.hpp"
#include "gatslice/neural.hpp"
#include "gatslice/rng.hpp"

namespace gatslice {

enum class Algorithm { hard, dqn, gat_dqn, a2c, gat_a2c };

std::string_view algorithm_name(Algorithm a);
/// Accepts hard, dqn, gat-dqn, a2c, gat-a2c.
Algorithm parse_algorithm(std::string_view name);
bool uses_gat(Algorithm a);
bool is_actor_critic(Algorithm a);
bool is_learning(Algorithm a);

struct Transition {
    nn::AgentInput obs;
    int action = 0;
    double reward = 0.0;
    nn::AgentInput next_obs;
    double behavior = 1.0;  // probability the acting policy gave `action` (A2C)
};

/// Fixed-capacity FIFO of transitions with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// i = 0 is the oldest stored transition.
    const Transition& at(std::size_t i) const { return items_.at(i); }
    /// n draws with replacement.
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
};

/// Probability of acting on the learned policy: zero through warmup, then a
/// linear ramp to `end` over `ramp` periods, then constant.
struct EpsilonSchedule {
    int warmup = 0;
    int ramp = 1;
    double end = 0.95;

    double at(int period) const;
};

struct TrainerConfig {
    nn::LearnerConfig learner;
    int periods = 3000;
    int batch = 32;
    int replay_capacity = 10000;
    int target_sync = 100;
    double epsilon_end = 0.95;
    double ramp_fraction = 0.5;  // of the post-warmup periods

    void validate() const;
    /// floor(T / 5).
    int warmup_periods() const { return periods / 5; }
    EpsilonSchedule schedule() const;
};

/// One BS's learner, replay buffer and random stream.
class Agent {
public:
    Agent(int id, nn::Field field, Algorithm algorithm, const TrainerConfig& cfg, int num_actions,
          std::uint64_t seed);

    int id() const { return id_; }
    const nn::Field& field() const { return field_; }
    ReplayBuffer& replay() { return replay_; }
    const ReplayBuffer& replay() const { return replay_; }
    Rng& rng() { return rng_; }

    int random_action();
    /// Greedy Q action, or the actor's most likely action.
    int greedy_action(const nn::AgentInput& in);
    /// With probability epsilon the learned choice (greedy Q, or a draw from
    /// the actor), otherwise uniform.
    int act(const nn::AgentInput& in, double epsilon);
    /// Probability of the last chosen action under the acting policy; only
    /// tracked for actor-critic agents.
    double behavior() const { return behavior_; }

    /// One minibatch step; nullopt while the buffer holds fewer than a batch.
    std::optional<nn::UpdateStats> learn();
    void sync_target();
    long updates() const { return updates_; }
    void set_updates(long u) { updates_ = u; }

    nn::DqnLearner* dqn() { return dqn_.get(); }
    nn::A2cLearner* a2c() { return a2c_.get(); }

    /// Parameters and optimizer moments under "agent/<id>/...".
    std::vector<tl::NamedTensor> export_state();
    void import_state(std::span<const tl::NamedTensor> tensors);

private:
    int id_;
    nn::Field field_;
    Algorithm algorithm_;
    int num_actions_;
    int batch_;
    ReplayBuffer replay_;
    Rng rng_;
    std::unique_ptr<nn::DqnLearner> dqn_;
    std::unique_ptr<nn::A2cLearner> a2c_;
    long updates_ = 0;
    double behavior_ = 1.0;
};

/// Training bookkeeping for every agent: warmup, epsilon-greedy actions,
/// storage, one update per agent per post-warmup period and target syncs
/// every `target_sync` updates. The environment loop belongs to the caller.
class Trainer {
public:
    Trainer(Algorithm algorithm, TrainerConfig cfg, const NeighborGraph& graph, int num_actions, int hard_action,
            std::uint64_t seed);

    Algorithm algorithm() const { return algorithm_; }
    const TrainerConfig& config() const { return cfg_; }
    int warmup_periods() const { return is_learning(algorithm_) ? cfg_.warmup_periods() : 0; }
    /// Reported exploration parameter for `period` (0 for hard slicing).
    double epsilon(int period) const;

    std::vector<int> act(int period, std::span<const Observation> obs);
    /// Stores transitions and, past warmup, updates every agent.
    void observe(int period, std::span<const Observation> obs, std::span<const int> actions,
                 std::span<const double> rewards, std::span<const Observation> next_obs);

    std::vector<Agent>& agents() { return agents_; }
    long skipped_updates() const { return skipped_; }
    double last_loss() const { return last_loss_; }

    void save_checkpoint(const std::filesystem::path& dir, int period);
    /// Restores learner state; returns the period the checkpoint was taken at.
    int load_checkpoint(const std::filesystem::path& dir);

private:
    Algorithm algorithm_;
    TrainerConfig cfg_;
    EpsilonSchedule schedule_;
    int num_actions_;
    int hard_action_;
    std::uint64_t seed_;
    std::vector<Agent> agents_;
    long skipped_ = 0;
    double last_loss_ = 0.0;
};

struct ExperimentConfig {
    EnvConfig env;
    TrainerConfig trainer;
    Algorithm algorithm = Algorithm::gat_dqn;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;  // empty: nothing written
    int checkpoint_every = 0;       // periods; 0 disables periodic checkpoints
    int log_every = 100;
    std::optional<std::filesystem::path> resume_from;
    std::ostream* log = nullptr;
};

/// BS-averaged metrics of one period.
struct PeriodSummary {
    int period = 0;
    double utility = 0.0;
    double reward = 0.0;
    double se = 0.0;
    std::vector<double> ssr;
    double mean_ssr = 0.0;
    double epsilon = 0.0;
};

struct ExperimentResult {
    std::vector<PeriodSummary> periods;
    long reward_clips = 0;
    long skipped_updates = 0;
};

/// Runs T periods, writing metrics.csv, summary.csv and checkpoints when an
/// output directory is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Fixed metrics.csv header for the given slice names.
std::string metrics_header(std::span<const SliceProfile> slices);

/// Trailing median over `window` values ending at each index, starting at
/// the first full window.
std::vector<double> rolling_median(std::span<const double> xs, std::size_t window);

/// Averages a field of the last `n` period summaries.
double tail_mean(std::span<const PeriodSummary> periods, std::size_t n, double PeriodSummary::*field);
double tail_mean_ssr(std::span<const PeriodSummary> periods, std::size_t n, std::size_t slice);

/// A four-state, three-action, two-slice MDP with known optimum. Actions
/// are the compositions of 4 units into 2 slices; the myopic choice differs
/// from the optimal one in three states.
class ToyMdp {
public:
    static constexpr int kStates = 4;
    static constexpr int kActions = 3;

    ToyMdp();
    std::vector<Observation> reset(std::uint64_t seed);
    StepResult step(std::span<const int> actions);

    int state() const { return state_; }
    const NeighborGraph& graph() const { return graph_; }
    static std::vector<double> demand(int state);
    static double reward(int state, int action);
    static int next_state(int state, int action);

    /// Exact solution by value iteration.
    struct Solution {
        std::vector<double> value;
        std::vector<std::vector<double>> q;
        std::vector<int> policy;
        double residual = 0.0;  // sup-norm Bellman residual at the fixed point
    };
    static Solution solve(double gamma, double tol = 1e-13);
    static std::vector<int> myopic_policy();

private:
    NeighborGraph graph_;
    int state_ = 0;
    int prev_state_ = -1;
};

struct ToyResult {
    std::vector<int> policy;  // greedy action per state, all predecessors agreeing; -1 otherwise
    long updates = 0;
};

/// Trains a single non-attention learner on ToyMdp for `periods` periods
/// and reads off its greedy policy.
ToyResult train_toy(Algorithm algorithm, TrainerConfig cfg, std::uint64_t seed);

} // namespace gatslice
