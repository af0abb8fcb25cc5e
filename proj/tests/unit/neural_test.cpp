#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gatslice/neural.hpp"

using namespace gatslice;
using namespace gatslice::nn;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = 0.0, double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Path graph 0 - 1 - 2.
NeighborGraph path3() { return NeighborGraph({{0, 1}, {0, 1, 2}, {1, 2}}); }

std::vector<Observation> random_obs(Rng& rng, int n) {
    std::vector<Observation> o(static_cast<std::size_t>(n));
    for (auto& x : o) {
        for (int k = 0; k < 3; ++k) {
            x.prev.push_back(rng.uniform(0.0, 2.0));
            x.cur.push_back(rng.uniform(0.0, 2.0));
        }
    }
    return o;
}

Matrix state_of(Model& m, const Field& f, const AgentInput& in) {
    tl::Tape t(false);
    const auto p = m.bind(t);
    return m.state(t, p, f, stack_one(in)).value();
}

tl::Parameter& find(ParamSet& set, const std::string& suffix) {
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i].name.size() >= suffix.size() && set[i].name.compare(set[i].name.size() - suffix.size(), suffix.size(), suffix) == 0)
            return set[i];
    throw std::logic_error(suffix);
}

// Random non-zero biases so that nothing is trivially zero.
void jitter(Model& m, Rng& rng) {
    for (auto* p : m.all_parameters())
        if (p->value.rows() == 1) p->value = random_matrix(rng, 1, p->value.cols(), -0.3, 0.3);
}

} // namespace

TEST_CASE("dimensions") {
    NetConfig cfg;
    CHECK(cfg.state_dim() == 32 + 2 * 8 * 8);
    cfg.use_gat = false;
    CHECK(cfg.state_dim() == 64);
    cfg.heads = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("encoder") {
    NetConfig cfg;
    Rng init(1);
    Model m(cfg, 136, HeadKind::q, "a/", init);
    tl::Tape t(false);
    const auto p = m.bind(t);
    Batch zero{1, Matrix::Zero(1, 3), Matrix::Zero(1, 3)};
    const auto [hp, hc] = m.embed(t, p, zero);
    CHECK(hp.value().isZero());
    CHECK(hc.value().isZero());
    Rng rng(2);
    Batch x{4, random_matrix(rng, 4, 3, -2, 2), random_matrix(rng, 4, 3, -2, 2)};
    const auto [a, b] = m.embed(t, p, x);
    CHECK(a.cols() == 32);
    CHECK(b.cols() == 32);
    CHECK((a.value().array() >= 0).all());
    CHECK((b.value().array() >= 0).all());
}

TEST_CASE("singleton neighborhood reduces attention to a per-node transform") {
    NetConfig cfg;
    Rng init(3);
    Model m(cfg, 10, HeadKind::q, "a/", init);
    const NeighborGraph alone(std::vector<std::vector<int>>{{0}});
    const Field f = make_field(alone, 0, 2);
    Rng rng(4);
    const auto obs = random_obs(rng, 1);
    const AgentInput in = gather_input(f, obs);
    const Matrix s = state_of(m, f, in);
    REQUIRE(s.cols() == 160);
    // h' = relu(W_c h) with every attention weight equal to one.
    const Matrix h = (in.prev * m.trunk[0].value + m.trunk[1].value).cwiseMax(0.0);
    const Matrix h1 = (h * m.trunk[6].value).cwiseMax(0.0);
    const Matrix h2 = (h1 * m.trunk[9].value).cwiseMax(0.0);
    CHECK((s.block(0, 32, 1, 64) - h1).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.block(0, 96, 1, 64) - h2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-hop influence on a path graph") {
    NetConfig cfg;
    Rng init(5);
    Model m(cfg, 10, HeadKind::q, "a/", init);
    jitter(m, init);
    const Field f = make_field(path3(), 0, 2);
    REQUIRE(f.nodes == std::vector<int>{0, 1, 2});
    Rng rng(6);
    auto obs = random_obs(rng, 3);
    const Matrix base = state_of(m, f, gather_input(f, obs));
    obs[2].prev[0] += 0.7;
    obs[2].prev[2] -= 0.4;
    const Matrix moved = state_of(m, f, gather_input(f, obs));
    CHECK((moved.block(0, 0, 1, 32) - base.block(0, 0, 1, 32)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((moved.block(0, 32, 1, 64) - base.block(0, 32, 1, 64)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((moved.block(0, 96, 1, 64) - base.block(0, 96, 1, 64)).cwiseAbs().maxCoeff() > 1e-9);
    // A one-layer stack cannot see two hops.
    const Field f1 = make_field(path3(), 0, 1);
    CHECK(f1.nodes == std::vector<int>{0, 1});
}

TEST_CASE("pruned layer plans match evaluating every node") {
    NetConfig cfg;
    Rng init(7);
    Model m(cfg, 10, HeadKind::q, "a/", init);
    jitter(m, init);
    // Hexagon ring around a center plus a tail: 0 center, 1..6 ring, 7 hangs off 1.
    std::vector<std::vector<int>> adj(8);
    for (int i = 1; i <= 6; ++i) {
        adj[0].push_back(i);
        adj[static_cast<std::size_t>(i)] = {0, i, i % 6 + 1, (i + 4) % 6 + 1};
    }
    adj[0].push_back(0);
    adj[1].push_back(7);
    adj[7] = {1, 7};
    for (auto& a : adj) std::sort(a.begin(), a.end());
    const NeighborGraph g(adj);
    Rng rng(8);
    const auto obs = random_obs(rng, 8);
    for (int agent = 0; agent < 8; ++agent) {
        const Field pruned = make_field(g, agent, 2);
        Field full = pruned;
        full.layers = {full_plan(pruned), full_plan(pruned)};
        const AgentInput in = gather_input(pruned, obs);
        CHECK((state_of(m, pruned, in) - state_of(m, full, in)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("relabelling the BSs leaves an agent's state unchanged") {
    NetConfig cfg;
    Rng init(9);
    Model m(cfg, 10, HeadKind::q, "a/", init);
    jitter(m, init);
    Rng rng(10);
    const auto obs = random_obs(rng, 5);
    // Star with a tail: 2 is the hub, 4 hangs off 0.
    const NeighborGraph g({{0, 2, 4}, {1, 2}, {0, 1, 2, 3}, {2, 3}, {0, 4}});
    const std::vector<int> perm{3, 0, 4, 1, 2};  // new id of old node i
    std::vector<std::vector<int>> adj(5);
    std::vector<Observation> pobs(5);
    for (int i = 0; i < 5; ++i) {
        for (int j : g.neighbors(i)) adj[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].push_back(perm[static_cast<std::size_t>(j)]);
        pobs[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = obs[static_cast<std::size_t>(i)];
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    const NeighborGraph pg(adj);
    for (int agent = 0; agent < 5; ++agent) {
        const Field f = make_field(g, agent, 2);
        const Field pf = make_field(pg, perm[static_cast<std::size_t>(agent)], 2);
        const Matrix a = state_of(m, f, gather_input(f, obs));
        const Matrix b = state_of(m, pf, gather_input(pf, pobs));
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("dueling head") {
    NetConfig cfg;
    Rng init(11);
    Model m(cfg, 136, HeadKind::q, "a/", init);
    jitter(m, init);
    const Field f = make_field(path3(), 1, 2);
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto obs = random_obs(rng, 3);
        const AgentInput in = gather_input(f, obs);
        tl::Tape t(false);
        const auto p = m.bind(t);
        const Var s = m.state(t, p, f, stack_one(in));
        const Matrix q = m.q_values(p, s).value();
        const auto [v, a] = m.value_advantage(p, s);
        REQUIRE(q.cols() == 136);
        CHECK(std::abs(q.mean() - v.value()(0, 0)) < 1e-9);
        (void)a;
    }
    const AgentInput in = gather_input(f, random_obs(rng, 3));
    const Matrix before = m.q_values(f, stack_one(in));
    find(m.head, "advantage/b").value.array() += 3.25;
    const Matrix after = m.q_values(f, stack_one(in));
    CHECK((before - after).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("greedy and sampled actions") {
    CHECK(greedy_action(std::vector<double>(5, 0.3)) == 0);
    CHECK(greedy_action(std::vector<double>{0, 0, 0, 1, 0}) == 3);
    std::vector<double> tie(9, 0.0);
    tie[2] = tie[7] = 1.0;
    CHECK(greedy_action(tie) == 2);

    Rng rng(13);
    Matrix one_hot = Matrix::Zero(1, 6);
    one_hot(0, 4) = 1.0;
    for (int i = 0; i < 100; ++i) CHECK(sample_action(one_hot, rng) == 4);
    Matrix pi(1, 4);
    pi << 0.1, 0.2, 0.3, 0.4;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(sample_action(pi, rng))];
    for (int a = 0; a < 4; ++a) CHECK(std::abs(counts[static_cast<std::size_t>(a)] / 1e5 - pi(0, a)) < 0.01);
}

TEST_CASE("bootstrap targets") {
    Matrix r(3, 1);
    r << 1.0, 0.2, -0.5;
    Rng rng(14);
    const Matrix qt = random_matrix(rng, 3, 6, -1, 1);
    const Matrix y = dqn_targets(r, qt, 0.9);
    for (int b = 0; b < 3; ++b) CHECK(y(b, 0) == r(b, 0) + 0.9 * qt.row(b).maxCoeff());
    CHECK(dqn_targets(r, Matrix::Zero(3, 6), 0.9)(0, 0) == 1.0);
    // Tied parameters: double DQN is vanilla DQN bit for bit.
    CHECK(double_dqn_targets(r, qt, qt, 0.9) == y);
    const Matrix qo = random_matrix(rng, 3, 6, -1, 1);
    const Matrix yd = double_dqn_targets(r, qo, qt, 0.9);
    for (int b = 0; b < 3; ++b) CHECK(yd(b, 0) == r(b, 0) + 0.9 * qt(b, greedy_action(Matrix(qo.row(b)))));

    Matrix half(1, 1);
    half << 0.5;
    const Matrix d = td_advantage(half, Matrix::Zero(1, 1), Matrix::Zero(1, 1), 0.9);
    CHECK(d(0, 0) == 0.5);
    tl::Tape t;
    const Var v = t.variable(Matrix::Zero(1, 1));
    CHECK(critic_loss(v, half).item() == 0.25);
    // A critic at its fixed point has zero TD error.
    Matrix v_star(1, 1);
    v_star << 0.5 / (1 - 0.9);
    CHECK(std::abs(td_advantage(half, v_star, v_star, 0.9)(0, 0)) < 1e-12);
}

TEST_CASE("actor loss") {
    Rng rng(15);
    const std::vector<int> actions{0, 2};
    {
        tl::Tape t;
        const Var z = t.variable(random_matrix(rng, 2, 3, -1, 1));
        const Var l = actor_loss(z, actions, Matrix::Zero(2, 1), 0.0);
        CHECK(l.item() == 0.0);
        t.backward(l);
        CHECK(z.grad().isZero());
    }
    {
        tl::Tape t;
        const Var z = t.variable(Matrix::Zero(1, 136));
        const std::vector<int> a{5};
        CHECK(actor_loss(z, a, Matrix::Zero(1, 1), 1.0).item() == doctest::Approx(-std::log(136.0)).epsilon(1e-12));
        CHECK(std::log(136.0) == doctest::Approx(4.913).epsilon(1e-3));
    }
    // With positive delta the loss falls as pi(a|s) rises.
    Matrix z = Matrix::Zero(1, 3);
    Matrix delta(1, 1);
    delta << 0.8;
    const std::vector<int> a{1};
    double last = 1e9;
    for (double boost = 0.0; boost < 3.0; boost += 0.5) {
        z(0, 1) = boost;
        tl::Tape t(false);
        const double l = actor_loss(t.constant(z), a, delta, 0.0).item();
        CHECK(l < last);
        last = l;
    }
}

TEST_CASE("end-to-end gradient through heads, attention and encoder on a 3-BS graph") {
    NetConfig cfg;
    cfg.embed = 6;
    cfg.att = 4;
    cfg.head_out = 3;
    cfg.heads = 2;
    cfg.hidden = 10;
    for (HeadKind kind : {HeadKind::q, HeadKind::actor, HeadKind::critic}) {
        Rng init(16);
        Model m(cfg, 5, kind, "a/", init);
        jitter(m, init);
        const Field f = make_field(path3(), 0, 2);
        Rng rng(17);
        std::vector<AgentInput> ins;
        for (int b = 0; b < 3; ++b) ins.push_back(gather_input(f, random_obs(rng, 3)));
        std::vector<const AgentInput*> ptrs{&ins[0], &ins[1], &ins[2]};
        const Batch x = stack(ptrs);
        const std::vector<int> acts{1, 4, 0};
        Matrix y(3, 1), delta(3, 1);
        y << 0.3, -0.2, 1.1;
        delta << 0.5, -0.7, 0.2;

        auto loss = [&](tl::Tape& t) {
            const auto p = m.bind(t);
            const Var s = m.state(t, p, f, x);
            if (kind == HeadKind::q) return critic_loss(tl::gather(m.q_values(p, s), acts), y);
            if (kind == HeadKind::actor) return actor_loss(m.policy_logits(p, s), acts, delta, 0.05);
            return critic_loss(m.state_value(p, s), y);
        };
        for (auto* p : m.all_parameters()) p->zero_grad();
        {
            tl::Tape t;
            t.backward(loss(t));
        }
        double worst = 0.0;
        const double h = 1e-6;
        for (auto* p : m.all_parameters()) {
            for (Eigen::Index i = 0; i < p->value.size(); ++i) {
                const double v0 = p->value.data()[i];
                p->value.data()[i] = v0 + h;
                tl::Tape up(false);
                const double lu = loss(up).item();
                p->value.data()[i] = v0 - h;
                tl::Tape down(false);
                const double ld = loss(down).item();
                p->value.data()[i] = v0;
                const double num = (lu - ld) / (2 * h);
                worst = std::max(worst, std::abs(num - p->grad.data()[i]) / std::max(1e-2, std::abs(num)));
            }
        }
        CAPTURE(static_cast<int>(kind));
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("dqn learner keeps the target frozen between syncs") {
    LearnerConfig cfg;
    cfg.net.embed = 8;
    cfg.net.att = 4;
    cfg.net.head_out = 2;
    cfg.net.heads = 2;
    cfg.net.hidden = 16;
    DqnLearner l(cfg, 7, "agent/0/", 1);
    CHECK(l.target().trunk.values_equal(l.online().trunk));
    CHECK(l.target().head.values_equal(l.online().head));
    const Field f = make_field(path3(), 1, 2);
    Rng rng(18);
    std::vector<AgentInput> a, b;
    for (int i = 0; i < 8; ++i) {
        a.push_back(gather_input(f, random_obs(rng, 3)));
        b.push_back(gather_input(f, random_obs(rng, 3)));
    }
    std::vector<const AgentInput*> pa, pb;
    for (int i = 0; i < 8; ++i) {
        pa.push_back(&a[static_cast<std::size_t>(i)]);
        pb.push_back(&b[static_cast<std::size_t>(i)]);
    }
    Minibatch mb{stack(pa), stack(pb), {0, 1, 2, 3, 4, 5, 6, 0}, random_matrix(rng, 8, 1), {}};
    ParamSet frozen;
    for (std::size_t i = 0; i < l.target().head.size(); ++i) frozen.add(l.target().head[i].name, l.target().head[i].value);
    for (int k = 0; k < 5; ++k) l.update(f, mb);
    CHECK(l.target().head.values_equal(frozen));
    CHECK_FALSE(l.online().head.values_equal(frozen));
    l.sync_target();
    CHECK(l.target().head.values_equal(l.online().head));
    CHECK(l.target().trunk.values_equal(l.online().trunk));
}

TEST_CASE("importance correction with on-policy behavior changes nothing") {
    LearnerConfig cfg;
    cfg.net.use_gat = false;
    cfg.net.hidden = 16;
    LearnerConfig corrected = cfg;
    corrected.is_truncation = 1.0;
    A2cLearner plain(cfg, 4, "a/", 3), fixed(corrected, 4, "a/", 3);
    const NeighborGraph alone(std::vector<std::vector<int>>{{0}});
    const Field f = make_field(alone, 0, 0);
    Rng rng(19);
    std::vector<AgentInput> a, b;
    for (int i = 0; i < 6; ++i) {
        a.push_back(gather_input(f, random_obs(rng, 1)));
        b.push_back(gather_input(f, random_obs(rng, 1)));
    }
    std::vector<const AgentInput*> pa, pb;
    for (int i = 0; i < 6; ++i) {
        pa.push_back(&a[static_cast<std::size_t>(i)]);
        pb.push_back(&b[static_cast<std::size_t>(i)]);
    }
    Minibatch mb{stack(pa), stack(pb), {0, 1, 2, 3, 0, 1}, random_matrix(rng, 6, 1), {}};
    const Matrix pi = fixed.actor().policy(f, mb.obs);
    mb.behavior.resize(6, 1);
    for (int i = 0; i < 6; ++i) mb.behavior(i, 0) = pi(i, mb.actions[static_cast<std::size_t>(i)]);
    plain.update(f, mb);
    fixed.update(f, mb);
    CHECK(plain.actor().head.values_equal(fixed.actor().head));
    // Off-policy samples get down-weighted, which changes the step.
    mb.behavior.setConstant(1.0);
    A2cLearner plain2(cfg, 4, "a/", 3), fixed2(corrected, 4, "a/", 3);
    plain2.update(f, mb);
    fixed2.update(f, mb);
    CHECK_FALSE(plain2.actor().head.values_equal(fixed2.actor().head));
    CHECK(plain2.critic().head.values_equal(fixed2.critic().head));
}

TEST_CASE("xavier initialization range") {
    Rng rng(20);
    const Matrix w = xavier(30, 50, rng);
    const double bound = std::sqrt(6.0 / 80.0);
    CHECK(w.cwiseAbs().maxCoeff() <= bound);
    CHECK(w.cwiseAbs().maxCoeff() > 0.9 * bound);
}
