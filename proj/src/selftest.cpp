#include "gatslice/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "gatslice/env.hpp"
#include "gatslice/tensor.hpp"
#include "gatslice/trainer.hpp"

namespace gatslice {

namespace {

using tl::Matrix;
using tl::Tape;
using tl::Var;
using Fn = std::function<Var(Tape&, std::span<const Var>)>;

Matrix random_matrix(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

double loss_value(const Fn& f, const std::vector<Matrix>& inputs, const Matrix& weight) {
    Tape tape(false);
    std::vector<Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.constant(m));
    return (f(tape, vars).value().array() * weight.array()).sum();
}

// Max relative error of the analytic gradient of sum(W * f(x)) against
// central differences, over every input entry.
double gradient_error(const Fn& f, std::vector<Matrix> inputs, Rng& rng) {
    Matrix weight;
    {
        Tape probe(false);
        std::vector<Var> vars;
        for (const auto& m : inputs) vars.push_back(probe.constant(m));
        const Var out = f(probe, vars);
        weight = random_matrix(rng, static_cast<int>(out.rows()), static_cast<int>(out.cols()));
    }
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.variable(m));
    const Var out = f(tape, vars);
    tape.backward(tl::sum(tl::mul(out, tape.constant(weight))));

    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix analytic = vars[k].grad();
        for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
            const double x = inputs[k].data()[i];
            inputs[k].data()[i] = x + h;
            const double up = loss_value(f, inputs, weight);
            inputs[k].data()[i] = x - h;
            const double down = loss_value(f, inputs, weight);
            inputs[k].data()[i] = x;
            const double numeric = (up - down) / (2.0 * h);
            const double err = std::abs(numeric - analytic.data()[i]) / std::max(1.0, std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

tl::AttentionMask ring_mask(int n) {
    tl::AttentionMask m{n, n, std::vector<std::uint8_t>(static_cast<std::size_t>(n * n), 0)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(i - j) <= 1 || std::abs(i - j) == n - 1) m.edges[static_cast<std::size_t>(i * n + j)] = 1;
    return m;
}

std::string number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

std::vector<CheckResult> check_gradients() {
    Rng rng(7);
    const int rows[] = {3, 4};
    const auto R = [&](int r, int c) { return random_matrix(rng, r, c); };
    // Shift away from the ReLU kink and the log singularity.
    Matrix away = R(rows[0], rows[1]);
    for (Eigen::Index i = 0; i < away.size(); ++i) away.data()[i] += away.data()[i] >= 0 ? 0.1 : -0.1;
    Matrix positive = R(3, 4).array().abs() + 0.5;
    Matrix probs = R(3, 4).array().exp();
    probs.array().colwise() /= probs.array().rowwise().sum();
    const int idx[] = {2, 0, 3};
    const int sel[] = {1, 1, 0};
    const tl::AttentionMask mask = ring_mask(4);

    struct Case {
        std::string name;
        Fn f;
        std::vector<Matrix> in;
    };
    const std::vector<Case> cases{
        {"matmul", [](Tape&, auto v) { return tl::matmul(v[0], v[1]); }, {R(3, 4), R(4, 2)}},
        {"add", [](Tape&, auto v) { return tl::add(v[0], v[1]); }, {R(3, 4), R(3, 4)}},
        {"add_row", [](Tape&, auto v) { return tl::add(v[0], v[1]); }, {R(3, 4), R(1, 4)}},
        {"add_col", [](Tape&, auto v) { return tl::add(v[0], v[1]); }, {R(3, 4), R(3, 1)}},
        {"sub_scalar", [](Tape&, auto v) { return tl::sub(v[0], v[1]); }, {R(3, 4), R(1, 1)}},
        {"mul", [](Tape&, auto v) { return tl::mul(v[0], v[1]); }, {R(3, 4), R(3, 4)}},
        {"mul_col", [](Tape&, auto v) { return tl::mul(v[0], v[1]); }, {R(3, 4), R(3, 1)}},
        {"scale", [](Tape&, auto v) { return tl::scale(v[0], -2.5); }, {R(3, 4)}},
        {"relu", [](Tape&, auto v) { return tl::relu(v[0]); }, {away}},
        {"softmax", [](Tape&, auto v) { return tl::softmax(v[0], 1.7); }, {R(3, 4)}},
        {"log_softmax", [](Tape&, auto v) { return tl::log_softmax(v[0], 0.6); }, {R(3, 4)}},
        {"concat", [](Tape&, auto v) { return tl::concat({v[0], v[1]}); }, {R(3, 2), R(3, 3)}},
        {"mean", [](Tape&, auto v) { return tl::mean(v[0]); }, {R(3, 4)}},
        {"sum", [](Tape&, auto v) { return tl::sum(v[0]); }, {R(3, 4)}},
        {"row_mean", [](Tape&, auto v) { return tl::row_mean(v[0]); }, {R(3, 4)}},
        {"square", [](Tape&, auto v) { return tl::square(v[0]); }, {R(3, 4)}},
        {"log", [](Tape&, auto v) { return tl::log(v[0]); }, {positive}},
        {"entropy", [](Tape&, auto v) { return tl::entropy(v[0]); }, {probs}},
        {"gather", [&](Tape&, auto v) { return tl::gather(v[0], idx); }, {R(3, 4)}},
        {"select_rows", [&](Tape&, auto v) { return tl::select_rows(v[0], sel); }, {R(2, 4)}},
        {"masked_attention",
         [&](Tape&, auto v) { return tl::masked_attention(v[0], v[1], v[2], mask, 2, 0.8); },
         {R(8, 6), R(8, 6), R(8, 4)}},
    };
    std::vector<CheckResult> out;
    for (const auto& c : cases) {
        const double err = gradient_error(c.f, c.in, rng);
        out.push_back({"gradient/" + c.name, err < 1e-4, "max rel err " + number(err)});
    }
    return out;
}

std::vector<CheckResult> check_codecs() {
    std::vector<CheckResult> out;
    for (const auto& [units, expected] : {std::pair{18, 136}, std::pair{55, 1431}}) {
        const ActionCodec codec(units, 3);
        bool ok = codec.size() == expected;
        for (int a = 0; ok && a < codec.size(); ++a) {
            const auto& c = codec.decode(a);
            int total = 0;
            for (int x : c) {
                ok = ok && x >= 1;
                total += x;
            }
            ok = ok && total == units && codec.encode(c) == a;
        }
        out.push_back({"codec/" + std::to_string(units) + "_units", ok, std::to_string(codec.size()) + " actions"});
    }
    return out;
}

std::vector<CheckResult> check_attention() {
    Rng rng(11);
    const int n = 6;
    const tl::AttentionMask mask = ring_mask(n);
    const Matrix a = tl::attention_weights(random_matrix(rng, n, 5) * 3.0, random_matrix(rng, n, 5) * 3.0, mask, 1.3);
    double row_err = 0.0;
    double off_mask = 0.0;
    for (int i = 0; i < n; ++i) {
        row_err = std::max(row_err, std::abs(a.row(i).sum() - 1.0));
        for (int j = 0; j < n; ++j)
            if (!mask(i, j)) off_mask = std::max(off_mask, std::abs(a(i, j)));
    }
    return {{"attention/row_sums", row_err <= 1e-9, "max |sum-1| " + number(row_err)},
            {"attention/off_graph_zero", off_mask == 0.0, "max off-mask weight " + number(off_mask)}};
}

std::vector<CheckResult> check_toy_oracle() {
    TrainerConfig cfg;
    cfg.periods = 25000;
    const auto optimum = ToyMdp::solve(cfg.learner.gamma).policy;
    const ToyResult r = train_toy(Algorithm::dqn, cfg, 1);
    std::string got;
    for (int a : r.policy) got += std::to_string(a);
    std::string want;
    for (int a : optimum) want += std::to_string(a);
    return {{"toy_q_oracle/dqn", r.policy == optimum,
             "learned " + got + " optimal " + want + " after " + std::to_string(r.updates) + " updates"}};
}

std::vector<CheckResult> run_selftest() {
    std::vector<CheckResult> all;
    for (auto part : {check_gradients, check_codecs, check_attention, check_toy_oracle}) {
        auto r = part();
        all.insert(all.end(), r.begin(), r.end());
    }
    return all;
}

} // namespace gatslice
