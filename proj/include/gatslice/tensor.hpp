#pragma once

// Dense rank-2 tensors with a reverse-mode gradient tape.

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gatslice::tl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A trainable tensor that outlives any single tape.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v);
    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a tape.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double item() const;
    Tape& tape() const { return *tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* t, int id) : tape_(t), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Records primitive ops in creation order (which is topological) and
/// replays them backwards. A non-recording tape only evaluates values.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, int self)>;

    explicit Tape(bool record = true) : record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix v);
    /// Differentiable leaf; its gradient is readable through Var::grad().
    Var variable(Matrix v);
    /// Leaf bound to a parameter; backward() accumulates into p.grad.
    Var parameter(Parameter& p);

    /// d loss / d leaf for every leaf. `loss` must be 1x1. One call per tape.
    void backward(Var loss);

    bool recording() const { return record_; }
    std::size_t size() const { return nodes_.size(); }

    // Op implementation interface.
    Var push(Matrix value, bool requires_grad, BackwardFn fn);
    bool requires_grad(const Var& v) const { return nodes_[static_cast<std::size_t>(v.id())].requires_grad; }
    const Matrix& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad_of(int id) const;
    /// Gradient accumulator of a node, zero-allocated on first use.
    Matrix& grad_ref(int id);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        BackwardFn backward;
    };
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

    std::deque<Node> nodes_;
    bool record_ = true;
    bool backward_done_ = false;
};

// Primitives. Shapes are checked; mismatches throw std::invalid_argument.

Var matmul(Var a, Var b);
/// Elementwise a + b; b may also be a 1 x cols row, a rows x 1 column or a
/// 1 x 1 scalar, broadcast over a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product; b may be a rows x 1 column broadcast over a.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
/// Row-wise softmax of tau * a (tau multiplies the logits).
Var softmax(Var a, double tau = 1.0);
/// Row-wise log of softmax(a, tau).
Var log_softmax(Var a, double tau = 1.0);
/// Column-wise concatenation; all parts need the same row count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
/// Mean of all entries (1 x 1).
Var mean(Var a);
Var sum(Var a);
/// Per-row mean (rows x 1).
Var row_mean(Var a);
Var square(Var a);
Var log(Var a);
/// Per-row Shannon entropy -sum p log p in nats (rows x 1).
Var entropy(Var p);
/// out(r) = a(r, index[r]) (rows x 1).
Var gather(Var a, std::span<const int> index);
/// Rows of `a` in the given order.
Var select_rows(Var a, std::span<const int> rows);
/// Value copy with no gradient path.
Var stop_gradient(Var a);

/// Attention mask between `rows` query nodes and `cols` key nodes,
/// row-major (1 = query i may attend to key j).
struct AttentionMask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> edges;

    bool operator()(int i, int j) const { return edges[static_cast<std::size_t>(i * cols + j)] != 0; }
};

/// Masked softmax attention weights of one head of one graph:
/// A(i, j) = exp(tau S_i . T_j) / sum over masked j' (zero off-mask).
/// Every query row needs at least one allowed key.
Matrix attention_weights(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& t,
                         const AttentionMask& mask, double tau);

/// Multi-head masked attention over a batch of graphs stacked by rows.
/// Graph b owns query rows [b q, (b+1) q) of S and key rows [b n, (b+1) n)
/// of T and C, where q x n is the mask shape. S and T hold `heads` column
/// blocks of width p, C holds `heads` blocks of width c. Per graph and head
/// the result is A C; heads are concatenated by columns. No nonlinearity.
Var masked_attention(Var s, Var t, Var c, const AttentionMask& mask, int heads, double tau);

/// Adaptive moment estimation.
class Adam {
public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam() = default;
    Adam(std::vector<Parameter*> params, Options opt);

    /// Applies one update from each parameter's accumulated grad.
    void step();
    void zero_grad();
    long steps() const { return t_; }
    const Options& options() const { return opt_; }

    // State, exposed for checkpointing.
    const std::vector<Parameter*>& params() const { return params_; }
    std::vector<Matrix>& first_moments() { return m_; }
    std::vector<Matrix>& second_moments() { return v_; }
    void set_steps(long t) { t_ = t; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    Options opt_;
    long t_ = 0;
};

struct NamedTensor {
    std::string name;
    Matrix value;
};

/// Writes `<dir>/tensors.bin` and `<dir>/manifest.json`.
///
/// tensors.bin layout (little-endian): magic "GSTL", u32 version (1),
/// u32 count, then per tensor: u32 name length, name bytes, u32 rows,
/// u32 cols, rows*cols float64 row-major. The manifest lists every tensor's
/// name, shape and byte offset of its data plus the caller's metadata JSON
/// text under "meta".
void save_checkpoint(const std::filesystem::path& dir, std::span<const NamedTensor> tensors,
                     const std::string& meta_json = "{}");
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& dir);

} // namespace gatslice::tl
