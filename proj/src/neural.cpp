#include "gatslice/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gatslice/error.hpp"

namespace gatslice::nn {

namespace {

// Trunk layout: encoder (prev W, prev b, cur W, cur b), then Ws, Wt, Wc per layer.
constexpr std::size_t kEncPrevW = 0, kEncPrevB = 1, kEncCurW = 2, kEncCurB = 3, kGatBase = 4;
// Head layout: hidden W, hidden b, then (value W, value b, advantage W, advantage b)
// for dueling Q, or (out W, out b).
constexpr std::size_t kHidW = 0, kHidB = 1, kOutW = 2, kOutB = 3, kAdvW = 4, kAdvB = 5;

Var dense(Var x, Var w, Var b) { return tl::add(tl::matmul(x, w), b); }

} // namespace

int NetConfig::state_dim() const {
    return use_gat ? embed + gat_layers * heads * head_out : 2 * embed;
}

void NetConfig::validate() const {
    if (demand_dim < 1 || embed < 1 || att < 1 || head_out < 1 || heads < 1 || hidden < 1)
        throw ConfigError("network dimensions must be positive");
    if (use_gat && gat_layers < 1) throw ConfigError("attention needs at least one layer");
    if (!(tau > 0.0)) throw ConfigError("attention temperature must be positive");
}

tl::Parameter& ParamSet::add(std::string name, Matrix init) {
    params_.emplace_back(std::move(name), std::move(init));
    return params_.back();
}

std::vector<tl::Parameter*> ParamSet::pointers() {
    std::vector<tl::Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

void ParamSet::copy_values_from(const ParamSet& other) {
    if (other.size() != size()) throw std::invalid_argument("parameter sets differ in size");
    for (std::size_t i = 0; i < size(); ++i) {
        if (other[i].value.rows() != params_[i].value.rows() || other[i].value.cols() != params_[i].value.cols())
            throw std::invalid_argument("parameter shape mismatch for " + params_[i].name);
        params_[i].value = other[i].value;
    }
}

void ParamSet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

bool ParamSet::values_equal(const ParamSet& other) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (other[i].value != params_[i].value) return false;
    return true;
}

Field make_field(const NeighborGraph& graph, int m, int hops) {
    if (hops < 0) throw std::invalid_argument("negative hop count");
    Field f;
    f.nodes = graph.receptive_field(m, hops);
    f.center = static_cast<int>(std::find(f.nodes.begin(), f.nodes.end(), m) - f.nodes.begin());
    auto linked = [&](int u, int v) { return u == v || graph.connected(u, v); };
    const int n = f.size();
    f.mask = {n, n, std::vector<std::uint8_t>(static_cast<std::size_t>(n * n), 0)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (linked(f.nodes[static_cast<std::size_t>(i)], f.nodes[static_cast<std::size_t>(j)]))
                f.mask.edges[static_cast<std::size_t>(i * n + j)] = 1;

    std::vector<int> inputs = f.nodes;  // global ids of the current layer's rows
    for (int l = 0; l < hops; ++l) {
        const auto within = graph.receptive_field(m, hops - 1 - l);
        LayerPlan plan;
        std::vector<int> outputs;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (std::binary_search(within.begin(), within.end(), inputs[i])) {
                if (inputs[i] == m) plan.center = static_cast<int>(outputs.size());
                plan.queries.push_back(static_cast<int>(i));
                outputs.push_back(inputs[i]);
            }
        }
        const int q = static_cast<int>(outputs.size()), k = static_cast<int>(inputs.size());
        plan.mask = {q, k, std::vector<std::uint8_t>(static_cast<std::size_t>(q * k), 0)};
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < k; ++j)
                if (linked(outputs[static_cast<std::size_t>(i)], inputs[static_cast<std::size_t>(j)]))
                    plan.mask.edges[static_cast<std::size_t>(i * k + j)] = 1;
        f.layers.push_back(std::move(plan));
        inputs = std::move(outputs);
    }
    return f;
}

LayerPlan full_plan(const Field& field) {
    LayerPlan plan;
    for (int i = 0; i < field.size(); ++i) plan.queries.push_back(i);
    plan.mask = field.mask;
    plan.center = field.center;
    return plan;
}

AgentInput gather_input(const Field& field, std::span<const Observation> observations) {
    const auto& own = observations[static_cast<std::size_t>(field.nodes[static_cast<std::size_t>(field.center)])];
    const auto dim = static_cast<Eigen::Index>(own.cur.size());
    AgentInput in;
    in.prev.resize(field.size(), dim);
    for (int i = 0; i < field.size(); ++i) {
        const auto& d = observations[static_cast<std::size_t>(field.nodes[static_cast<std::size_t>(i)])].prev;
        for (Eigen::Index c = 0; c < dim; ++c) in.prev(i, c) = d[static_cast<std::size_t>(c)];
    }
    in.cur.resize(1, dim);
    for (Eigen::Index c = 0; c < dim; ++c) in.cur(0, c) = own.cur[static_cast<std::size_t>(c)];
    return in;
}

Batch stack(std::span<const AgentInput* const> inputs) {
    if (inputs.empty()) throw std::invalid_argument("empty batch");
    const Eigen::Index n = inputs[0]->prev.rows();
    const Eigen::Index dim = inputs[0]->cur.cols();
    Batch b;
    b.size = static_cast<int>(inputs.size());
    b.prev.resize(n * b.size, dim);
    b.cur.resize(b.size, dim);
    for (int k = 0; k < b.size; ++k) {
        b.prev.middleRows(k * n, n) = inputs[static_cast<std::size_t>(k)]->prev;
        b.cur.row(k) = inputs[static_cast<std::size_t>(k)]->cur;
    }
    return b;
}

Batch stack_one(const AgentInput& input) {
    const AgentInput* p = &input;
    return stack(std::span<const AgentInput* const>(&p, 1));
}

Matrix xavier(int fan_in, int fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
    return m;
}

Model::Model(const NetConfig& cfg, int num_actions, HeadKind kind, const std::string& prefix, Rng& init)
    : cfg_(cfg), actions_(num_actions), kind_(kind) {
    cfg_.validate();
    if (num_actions < 1) throw ConfigError("action space is empty");
    const int n = cfg.demand_dim, k = cfg.embed;
    trunk.add(prefix + "encoder/prev/W", xavier(n, k, init));
    trunk.add(prefix + "encoder/prev/b", Matrix::Zero(1, k));
    trunk.add(prefix + "encoder/cur/W", xavier(n, k, init));
    trunk.add(prefix + "encoder/cur/b", Matrix::Zero(1, k));
    if (cfg.use_gat) {
        int in = k;
        for (int l = 0; l < cfg.gat_layers; ++l) {
            const std::string g = prefix + "gat/" + std::to_string(l) + "/";
            trunk.add(g + "Ws", xavier(in, cfg.heads * cfg.att, init));
            trunk.add(g + "Wt", xavier(in, cfg.heads * cfg.att, init));
            trunk.add(g + "Wc", xavier(in, cfg.heads * cfg.head_out, init));
            in = cfg.heads * cfg.head_out;
        }
    }
    const int s = cfg.state_dim(), h = cfg.hidden;
    if (kind == HeadKind::q) {
        head.add(prefix + "q/hidden/W", xavier(s, h, init));
        head.add(prefix + "q/hidden/b", Matrix::Zero(1, h));
        if (cfg.dueling) {
            head.add(prefix + "q/value/W", xavier(h, 1, init));
            head.add(prefix + "q/value/b", Matrix::Zero(1, 1));
            head.add(prefix + "q/advantage/W", xavier(h, num_actions, init));
            head.add(prefix + "q/advantage/b", Matrix::Zero(1, num_actions));
        } else {
            head.add(prefix + "q/out/W", xavier(h, num_actions, init));
            head.add(prefix + "q/out/b", Matrix::Zero(1, num_actions));
        }
    } else if (kind == HeadKind::actor) {
        head.add(prefix + "actor/hidden/W", xavier(s, h, init));
        head.add(prefix + "actor/hidden/b", Matrix::Zero(1, h));
        head.add(prefix + "actor/out/W", xavier(h, num_actions, init));
        head.add(prefix + "actor/out/b", Matrix::Zero(1, num_actions));
    } else {
        head.add(prefix + "critic/hidden/W", xavier(s, h, init));
        head.add(prefix + "critic/hidden/b", Matrix::Zero(1, h));
        head.add(prefix + "critic/value/W", xavier(h, 1, init));
        head.add(prefix + "critic/value/b", Matrix::Zero(1, 1));
    }
}

Model::Bound Model::bind(tl::Tape& tape) {
    Bound b;
    for (std::size_t i = 0; i < trunk.size(); ++i) b.trunk.push_back(tape.parameter(trunk[i]));
    for (std::size_t i = 0; i < head.size(); ++i) b.head.push_back(tape.parameter(head[i]));
    return b;
}

std::pair<Var, Var> Model::embed(tl::Tape& tape, const Bound& p, const Batch& x) const {
    Var prev = tl::relu(dense(tape.constant(x.prev), p.trunk[kEncPrevW], p.trunk[kEncPrevB]));
    Var cur = tl::relu(dense(tape.constant(x.cur), p.trunk[kEncCurW], p.trunk[kEncCurB]));
    return {prev, cur};
}

Var Model::gat_layer(const Bound& p, int layer, Var h, const LayerPlan& plan) const {
    const std::size_t base = kGatBase + 3 * static_cast<std::size_t>(layer);
    const int n = plan.mask.cols, q = plan.mask.rows;
    if (h.rows() % n != 0) throw std::invalid_argument("attention input rows do not match the plan");
    Var queries = h;
    if (q != n) {
        const auto graphs = static_cast<int>(h.rows() / n);
        std::vector<int> rows;
        rows.reserve(static_cast<std::size_t>(graphs * q));
        for (int b = 0; b < graphs; ++b)
            for (int i : plan.queries) rows.push_back(b * n + i);
        queries = tl::select_rows(h, rows);
    }
    Var s = tl::matmul(queries, p.trunk[base]);
    Var t = tl::matmul(h, p.trunk[base + 1]);
    Var c = tl::matmul(h, p.trunk[base + 2]);
    return tl::relu(tl::masked_attention(s, t, c, plan.mask, cfg_.heads, cfg_.tau));
}

Var Model::state(tl::Tape& tape, const Bound& p, const Field& f, const Batch& x) const {
    if (x.prev.rows() != static_cast<Eigen::Index>(x.size) * f.size())
        throw std::invalid_argument("batch does not match the receptive field");
    Var cur = tl::relu(dense(tape.constant(x.cur), p.trunk[kEncCurW], p.trunk[kEncCurB]));
    if (!cfg_.use_gat) {
        Matrix own_prev(x.size, x.prev.cols());
        for (int b = 0; b < x.size; ++b) own_prev.row(b) = x.prev.row(b * f.size() + f.center);
        Var prev = tl::relu(dense(tape.constant(std::move(own_prev)), p.trunk[kEncPrevW], p.trunk[kEncPrevB]));
        return tl::concat({cur, prev});
    }
    if (static_cast<int>(f.layers.size()) != cfg_.gat_layers)
        throw std::invalid_argument("receptive field was built for a different layer count");
    Var h = tl::relu(dense(tape.constant(x.prev), p.trunk[kEncPrevW], p.trunk[kEncPrevB]));
    std::vector<Var> parts{cur};
    for (int l = 0; l < cfg_.gat_layers; ++l) {
        const LayerPlan& plan = f.layers[static_cast<std::size_t>(l)];
        h = gat_layer(p, l, h, plan);
        std::vector<int> centers(static_cast<std::size_t>(x.size));
        for (int b = 0; b < x.size; ++b) centers[static_cast<std::size_t>(b)] = b * plan.mask.rows + plan.center;
        parts.push_back(tl::select_rows(h, centers));
    }
    return tl::concat(parts);
}

std::pair<Var, Var> Model::value_advantage(const Bound& p, Var s) const {
    if (kind_ != HeadKind::q || !cfg_.dueling) throw std::logic_error("not a dueling Q model");
    Var z = tl::relu(dense(s, p.head[kHidW], p.head[kHidB]));
    return {dense(z, p.head[kOutW], p.head[kOutB]), dense(z, p.head[kAdvW], p.head[kAdvB])};
}

Var Model::q_values(const Bound& p, Var s) const {
    if (kind_ != HeadKind::q) throw std::logic_error("not a Q model");
    if (!cfg_.dueling) {
        Var z = tl::relu(dense(s, p.head[kHidW], p.head[kHidB]));
        return dense(z, p.head[kOutW], p.head[kOutB]);
    }
    auto [v, a] = value_advantage(p, s);
    return tl::add(tl::sub(a, tl::row_mean(a)), v);
}

Var Model::policy_logits(const Bound& p, Var s) const {
    if (kind_ != HeadKind::actor) throw std::logic_error("not an actor model");
    Var z = tl::relu(dense(s, p.head[kHidW], p.head[kHidB]));
    return dense(z, p.head[kOutW], p.head[kOutB]);
}

Var Model::state_value(const Bound& p, Var s) const {
    if (kind_ != HeadKind::critic) throw std::logic_error("not a critic model");
    Var z = tl::relu(dense(s, p.head[kHidW], p.head[kHidB]));
    return dense(z, p.head[kOutW], p.head[kOutB]);
}

Matrix Model::q_values(const Field& f, const Batch& x) {
    tl::Tape tape(false);
    const Bound p = bind(tape);
    return q_values(p, state(tape, p, f, x)).value();
}

Matrix Model::policy(const Field& f, const Batch& x) {
    tl::Tape tape(false);
    const Bound p = bind(tape);
    return tl::softmax(policy_logits(p, state(tape, p, f, x))).value();
}

Matrix Model::state_value(const Field& f, const Batch& x) {
    tl::Tape tape(false);
    const Bound p = bind(tape);
    return state_value(p, state(tape, p, f, x)).value();
}

std::vector<tl::Parameter*> Model::all_parameters() {
    auto out = trunk.pointers();
    for (auto* p : head.pointers()) out.push_back(p);
    return out;
}

int greedy_action(std::span<const double> q) {
    if (q.empty()) throw std::invalid_argument("greedy_action of empty vector");
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
    return best;
}

int greedy_action(const Matrix& row) {
    return greedy_action(std::span<const double>(row.data(), static_cast<std::size_t>(row.cols())));
}

int sample_action(const Matrix& probs, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    int last = 0;
    for (Eigen::Index a = 0; a < probs.cols(); ++a) {
        if (probs(0, a) <= 0.0) continue;
        acc += probs(0, a);
        last = static_cast<int>(a);
        if (u < acc) return last;
    }
    return last;
}

Matrix dqn_targets(const Matrix& rewards, const Matrix& q_next_target, double gamma) {
    Matrix y(rewards.rows(), 1);
    for (Eigen::Index b = 0; b < rewards.rows(); ++b) y(b, 0) = rewards(b, 0) + gamma * q_next_target.row(b).maxCoeff();
    return y;
}

Matrix double_dqn_targets(const Matrix& rewards, const Matrix& q_next_online, const Matrix& q_next_target,
                          double gamma) {
    Matrix y(rewards.rows(), 1);
    for (Eigen::Index b = 0; b < rewards.rows(); ++b) {
        const int a = greedy_action(Matrix(q_next_online.row(b)));
        y(b, 0) = rewards(b, 0) + gamma * q_next_target(b, a);
    }
    return y;
}

Matrix td_advantage(const Matrix& rewards, const Matrix& v, const Matrix& v_next, double gamma) {
    return rewards + gamma * v_next - v;
}

Var critic_loss(Var v, const Matrix& targets) {
    return tl::mean(tl::square(tl::sub(v.tape().constant(targets), v)));
}

Var actor_loss(Var logits, std::span<const int> actions, const Matrix& delta, double lambda) {
    tl::Tape& tape = logits.tape();
    Var logp = tl::gather(tl::log_softmax(logits), actions);
    Var weighted = tl::mul(logp, tape.constant(delta));
    Var ent = tl::entropy(tl::softmax(logits));
    return tl::scale(tl::add(tl::mean(weighted), tl::scale(tl::mean(ent), lambda)), -1.0);
}

DqnLearner::DqnLearner(const LearnerConfig& cfg, int num_actions, const std::string& prefix, std::uint64_t seed)
    : cfg_(cfg) {
    Rng init(seed);
    online_ = Model(cfg.net, num_actions, HeadKind::q, prefix + "online/", init);
    Rng unused(seed);
    target_ = Model(cfg.net, num_actions, HeadKind::q, prefix + "target/", unused);
    sync_target();
    opt_ = tl::Adam(online_.all_parameters(), {.lr = cfg.lr_q});
}

void DqnLearner::sync_target() {
    target_.trunk.copy_values_from(online_.trunk);
    target_.head.copy_values_from(online_.head);
}

int DqnLearner::greedy(const Field& f, const AgentInput& in) { return greedy_action(q_values(f, in)); }

UpdateStats DqnLearner::update(const Field& f, const Minibatch& mb) {
    const Matrix q_next_target = target_.q_values(f, mb.next_obs);
    const Matrix y = cfg_.double_q ? double_dqn_targets(mb.rewards, online_.q_values(f, mb.next_obs), q_next_target, cfg_.gamma)
                                   : dqn_targets(mb.rewards, q_next_target, cfg_.gamma);
    tl::Tape tape;
    const auto p = online_.bind(tape);
    Var q = online_.q_values(p, online_.state(tape, p, f, mb.obs));
    Var loss = critic_loss(tl::gather(q, mb.actions), y);
    opt_.zero_grad();
    tape.backward(loss);
    opt_.step();
    return {loss.item(), 0.0, loss.item()};
}

A2cLearner::A2cLearner(const LearnerConfig& cfg, int num_actions, const std::string& prefix, std::uint64_t seed)
    : cfg_(cfg) {
    Rng init(seed);
    actor_ = Model(cfg.net, num_actions, HeadKind::actor, prefix + "actor/", init);
    critic_ = Model(cfg.net, num_actions, HeadKind::critic, prefix + "critic/", init);
    critic_opt_ = tl::Adam(critic_.all_parameters(), {.lr = cfg.lr_critic});
    actor_opt_ = tl::Adam(actor_.all_parameters(), {.lr = cfg.lr_actor});
}

int A2cLearner::greedy(const Field& f, const AgentInput& in) { return greedy_action(policy(f, in)); }

int A2cLearner::sample(const Field& f, const AgentInput& in, Rng& rng) { return sample_action(policy(f, in), rng); }

UpdateStats A2cLearner::update(const Field& f, const Minibatch& mb) {
    const Matrix v_next = critic_.state_value(f, mb.next_obs);
    tl::Tape critic_tape;
    const auto pc = critic_.bind(critic_tape);
    Var v = critic_.state_value(pc, critic_.state(critic_tape, pc, f, mb.obs));
    Matrix delta = td_advantage(mb.rewards, v.value(), v_next, cfg_.gamma);
    if (cfg_.is_truncation > 0.0) {
        if (mb.behavior.rows() != mb.obs.size) throw std::invalid_argument("actor correction needs behavior probabilities");
        const Matrix pi = actor_.policy(f, mb.obs);
        for (int b = 0; b < mb.obs.size; ++b)
            delta(b, 0) *= std::min(cfg_.is_truncation, pi(b, mb.actions[static_cast<std::size_t>(b)]) / mb.behavior(b, 0));
    }
    Var lc = critic_loss(v, mb.rewards + cfg_.gamma * v_next);
    critic_opt_.zero_grad();
    critic_tape.backward(lc);
    critic_opt_.step();

    tl::Tape actor_tape;
    const auto pa = actor_.bind(actor_tape);
    Var la = actor_loss(actor_.policy_logits(pa, actor_.state(actor_tape, pa, f, mb.obs)), mb.actions, delta,
                        cfg_.entropy_weight);
    actor_opt_.zero_grad();
    actor_tape.backward(la);
    actor_opt_.step();
    return {lc.item() + la.item(), la.item(), lc.item()};
}

} // namespace gatslice::nn
