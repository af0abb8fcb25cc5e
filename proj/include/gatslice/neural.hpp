#pragma once

// Per-agent networks: demand encoder, multi-head graph attention over the
// BS neighborhood, dueling Q head and actor/critic heads.

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "gatslice/env.hpp"
#include "gatslice/rng.hpp"
#include "gatslice/scenario.hpp"
#include "gatslice/tensor.hpp"

namespace gatslice::nn {

using tl::Matrix;
using tl::Var;

struct NetConfig {
    int demand_dim = 3;   // N
    int embed = 32;       // k
    int att = 32;         // p, per-head score projection width
    int head_out = 8;     // c, per-head output width
    int heads = 8;        // K
    int gat_layers = 2;
    int hidden = 128;
    double tau = 1.0;
    bool use_gat = true;
    bool dueling = true;

    /// k + layers K c with attention, 2k (current and previous embedding) without.
    int state_dim() const;
    void validate() const;
};

/// Parameters with stable addresses (optimizers keep pointers into them).
class ParamSet {
public:
    tl::Parameter& add(std::string name, Matrix init);
    std::size_t size() const { return params_.size(); }
    tl::Parameter& operator[](std::size_t i) { return params_[i]; }
    const tl::Parameter& operator[](std::size_t i) const { return params_[i]; }
    std::vector<tl::Parameter*> pointers();
    /// Copies values from a set with identical names and shapes.
    void copy_values_from(const ParamSet& other);
    void zero_grad();
    bool values_equal(const ParamSet& other) const;

private:
    std::deque<tl::Parameter> params_;
};

/// Rows one attention layer works on: it reads all rows produced by the
/// previous layer and emits rows only for `queries`.
struct LayerPlan {
    std::vector<int> queries;  // positions among the layer's input rows
    tl::AttentionMask mask;    // queries x inputs
    int center = 0;            // the agent's position among the queries
};

/// The part of the BS graph one agent reads: all nodes within `hops` hops,
/// ascending by id, with the induced adjacency (self loops included). Layer
/// l of `hops` only evaluates nodes within hops-1-l hops of the agent, which
/// is all the next layer needs.
struct Field {
    std::vector<int> nodes;
    int center = 0;
    tl::AttentionMask mask;
    std::vector<LayerPlan> layers;

    int size() const { return static_cast<int>(nodes.size()); }
};

Field make_field(const NeighborGraph& graph, int m, int hops);
/// Plan evaluating every field node against its full neighborhood.
LayerPlan full_plan(const Field& field);

/// One agent's network input: d^{t-1} of every field node (rows in field
/// order) and its own d^t.
struct AgentInput {
    Matrix prev;  // field size x N
    Matrix cur;   // 1 x N
};

AgentInput gather_input(const Field& field, std::span<const Observation> observations);

/// B inputs stacked: prev rows b * n + i, cur rows b.
struct Batch {
    int size = 0;
    Matrix prev;
    Matrix cur;
};

Batch stack(std::span<const AgentInput* const> inputs);
Batch stack_one(const AgentInput& input);

/// Xavier-uniform matrix (fan_in x fan_out).
Matrix xavier(int fan_in, int fan_out, Rng& rng);

enum class HeadKind { q, actor, critic };

/// Encoder, attention stack and heads of one network copy.
class Model {
public:
    Model() = default;
    Model(const NetConfig& cfg, int num_actions, HeadKind kind, const std::string& prefix, Rng& init);

    const NetConfig& config() const { return cfg_; }
    int num_actions() const { return actions_; }
    HeadKind kind() const { return kind_; }

    ParamSet trunk;  // encoder + attention layers
    ParamSet head;   // Q, actor or critic head

    /// Parameter vars bound to one tape, in ParamSet order.
    struct Bound {
        std::vector<Var> trunk, head;
    };
    Bound bind(tl::Tape& tape);

    /// Encoder outputs for a batch: h^{t-1} for every field node row and h^t.
    std::pair<Var, Var> embed(tl::Tape& tape, const Bound& p, const Batch& x) const;
    /// One attention layer (ReLU applied); h holds the plan's input rows per
    /// graph, the result its query rows.
    Var gat_layer(const Bound& p, int layer, Var h, const LayerPlan& plan) const;
    /// Agent states s (B x state_dim).
    Var state(tl::Tape& tape, const Bound& p, const Field& f, const Batch& x) const;

    Var q_values(const Bound& p, Var s) const;       // B x |A|
    /// Dueling parts, B x 1 and B x |A|.
    std::pair<Var, Var> value_advantage(const Bound& p, Var s) const;
    Var policy_logits(const Bound& p, Var s) const;  // B x |A|
    Var state_value(const Bound& p, Var s) const;    // B x 1

    /// Inference conveniences (non-recording tape).
    Matrix q_values(const Field& f, const Batch& x);
    Matrix policy(const Field& f, const Batch& x);
    Matrix state_value(const Field& f, const Batch& x);

    std::vector<tl::Parameter*> all_parameters();

private:
    NetConfig cfg_;
    int actions_ = 0;
    HeadKind kind_ = HeadKind::q;
};

/// Lowest index among the maxima.
int greedy_action(std::span<const double> q);
int greedy_action(const Matrix& row);
/// Categorical draw from a probability row.
int sample_action(const Matrix& probs, Rng& rng);

/// r + gamma max_a Q_target(s', a), per row.
Matrix dqn_targets(const Matrix& rewards, const Matrix& q_next_target, double gamma);
/// r + gamma Q_target(s', argmax_a Q_online(s', a)), per row.
Matrix double_dqn_targets(const Matrix& rewards, const Matrix& q_next_online, const Matrix& q_next_target,
                          double gamma);

/// delta = r + gamma V(s') - V(s).
Matrix td_advantage(const Matrix& rewards, const Matrix& v, const Matrix& v_next, double gamma);

/// mean (y - v)^2 with y held constant.
Var critic_loss(Var v, const Matrix& targets);
/// -mean[delta log pi(a|s) + lambda H(pi(.|s))], delta held constant.
Var actor_loss(Var logits, std::span<const int> actions, const Matrix& delta, double lambda);

struct LearnerConfig {
    NetConfig net;
    double gamma = 0.9;
    double lr_q = 1e-3;
    double lr_critic = 1e-3;
    double lr_actor = 3e-4;
    double entropy_weight = 0.01;
    bool double_q = true;
    // Off-policy correction of the actor: each sample's delta is scaled by
    // min(is_truncation, pi(a|s) / mu(a|s)) where mu is the behavior
    // probability. 0 trains on uncorrected replay samples.
    double is_truncation = 0.0;
};

/// A sampled minibatch for one agent.
struct Minibatch {
    Batch obs;
    Batch next_obs;
    std::vector<int> actions;
    Matrix rewards;  // B x 1
    Matrix behavior; // B x 1 behavior probabilities of `actions`; may be empty
};

struct UpdateStats {
    double loss = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
};

/// Online and target Q networks with double/dueling options.
class DqnLearner {
public:
    DqnLearner(const LearnerConfig& cfg, int num_actions, const std::string& prefix, std::uint64_t seed);

    Matrix q_values(const Field& f, const AgentInput& in) { return online_.q_values(f, stack_one(in)); }
    int greedy(const Field& f, const AgentInput& in);
    UpdateStats update(const Field& f, const Minibatch& mb);
    /// theta_t <- theta_u.
    void sync_target();

    Model& online() { return online_; }
    Model& target() { return target_; }
    tl::Adam& optimizer() { return opt_; }

private:
    LearnerConfig cfg_;
    Model online_;
    Model target_;
    tl::Adam opt_;
};

/// Separate actor and critic networks, each with its own encoder and
/// attention layers.
class A2cLearner {
public:
    A2cLearner(const LearnerConfig& cfg, int num_actions, const std::string& prefix, std::uint64_t seed);

    Matrix policy(const Field& f, const AgentInput& in) { return actor_.policy(f, stack_one(in)); }
    int greedy(const Field& f, const AgentInput& in);
    int sample(const Field& f, const AgentInput& in, Rng& rng);
    UpdateStats update(const Field& f, const Minibatch& mb);

    Model& actor() { return actor_; }
    Model& critic() { return critic_; }
    tl::Adam& critic_optimizer() { return critic_opt_; }
    tl::Adam& actor_optimizer() { return actor_opt_; }

private:
    LearnerConfig cfg_;
    Model actor_;
    Model critic_;
    tl::Adam critic_opt_;
    tl::Adam actor_opt_;
};

} // namespace gatslice::nn
