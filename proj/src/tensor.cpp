#include "gatslice/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <limits>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace gatslice::tl {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(const Var& a, const Var& b) {
    require(a.valid() && b.valid() && &a.tape() == &b.tape(), "operands live on different tapes");
}

// exp() below this underflows into subnormals, which are very slow; results
// at the floor are ~1e-304 and negligible against the row maximum of 1.
constexpr double kMinExponent = -700.0;

enum class Broadcast { same, row, col, scalar };

Broadcast broadcast_kind(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
    if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
    if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::col;
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_of(a) + " and " + shape_of(b));
}

// Reduces a gradient of a's shape to b's shape.
Matrix reduce_to(const Matrix& g, Broadcast kind) {
    switch (kind) {
    case Broadcast::same: return g;
    case Broadcast::row: return g.colwise().sum();
    case Broadcast::col: return g.rowwise().sum();
    case Broadcast::scalar: return Matrix::Constant(1, 1, g.sum());
    }
    return g;
}

Matrix broadcast_to(const Matrix& b, Eigen::Index rows, Eigen::Index cols, Broadcast kind) {
    switch (kind) {
    case Broadcast::same: return b;
    case Broadcast::row: return b.replicate(rows, 1);
    case Broadcast::col: return b.replicate(1, cols);
    case Broadcast::scalar: return Matrix::Constant(rows, cols, b(0, 0));
    }
    return b;
}

Var add_sub(Var a, Var b, double sign, const char* op) {
    require_same_tape(a, b);
    Tape& t = a.tape();
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const Broadcast kind = broadcast_kind(av, bv, op);
    Matrix out = av;
    out.noalias() += sign * broadcast_to(bv, av.rows(), av.cols(), kind);
    const int ia = a.id(), ib = b.id();
    const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    return t.push(std::move(out), ga || gb, [=](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        if (ga) tp.grad_ref(ia) += g;
        if (gb) tp.grad_ref(ib) += sign * reduce_to(g, kind);
    });
}

Matrix row_softmax(const Matrix& x, double tau) {
    Matrix y = tau * x;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().max(kMinExponent).exp().matrix();
        row /= row.sum();
    }
    return y;
}

} // namespace

Parameter::Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
    grad.setZero(value.rows(), value.cols());
}

const Matrix& Var::value() const { return tape_->value_of(id_); }
const Matrix& Var::grad() const { return tape_->grad_of(id_); }

double Var::item() const {
    const Matrix& v = value();
    require(v.rows() == 1 && v.cols() == 1, "item() needs a 1x1 tensor");
    return v(0, 0);
}

Var Tape::constant(Matrix v) { return push(std::move(v), false, nullptr); }

Var Tape::variable(Matrix v) { return push(std::move(v), record_, nullptr); }

Var Tape::parameter(Parameter& p) {
    Var v = push(p.value, record_, nullptr);
    if (record_) node(v.id()).param = &p;
    return v;
}

Var Tape::push(Matrix value, bool requires_grad, BackwardFn fn) {
    assert(value.allFinite() && "non-finite tensor value");
    Node n;
    n.value = std::move(value);
    n.requires_grad = record_ && requires_grad;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::grad_of(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0 && n.value.size() != 0) {
        // Untouched nodes have zero gradient; materialize lazily.
        auto& mutable_node = const_cast<Node&>(n);
        mutable_node.grad.setZero(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

Matrix& Tape::grad_ref(int id) {
    Node& n = node(id);
    if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var loss) {
    require(loss.valid() && &loss.tape() == this, "loss is not on this tape");
    require(record_, "backward on a non-recording tape");
    require(!backward_done_, "backward already ran on this tape");
    const Matrix& lv = loss.value();
    require(lv.rows() == 1 && lv.cols() == 1, "loss must be 1x1");
    backward_done_ = true;
    if (!node(loss.id()).requires_grad) return;
    grad_ref(loss.id()).setOnes();
    for (int id = loss.id(); id >= 0; --id) {
        Node& n = node(id);
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward) n.backward(*this, id);
        if (n.param) n.param->grad += n.grad;
    }
}

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = a.tape();
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.rows())
        throw std::invalid_argument("matmul: incompatible shapes " + shape_of(av) + " and " + shape_of(bv));
    Matrix out;
    out.noalias() = av * bv;
    const int ia = a.id(), ib = b.id();
    const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    return t.push(std::move(out), ga || gb, [=](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        if (ga) tp.grad_ref(ia).noalias() += g * tp.value_of(ib).transpose();
        if (gb) tp.grad_ref(ib).noalias() += tp.value_of(ia).transpose() * g;
    });
}

Var add(Var a, Var b) { return add_sub(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_sub(a, b, -1.0, "sub"); }

Var mul(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = a.tape();
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const Broadcast kind = broadcast_kind(av, bv, "mul");
    require(kind == Broadcast::same || kind == Broadcast::col, "mul: only same-shape or column broadcast");
    Matrix out = av.cwiseProduct(broadcast_to(bv, av.rows(), av.cols(), kind));
    const int ia = a.id(), ib = b.id();
    const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    return t.push(std::move(out), ga || gb, [=](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        const Matrix& x = tp.value_of(ia);
        const Matrix& y = tp.value_of(ib);
        if (ga) tp.grad_ref(ia) += g.cwiseProduct(broadcast_to(y, x.rows(), x.cols(), kind));
        if (gb) tp.grad_ref(ib) += reduce_to(g.cwiseProduct(x), kind);
    });
}

Var scale(Var a, double s) {
    Tape& t = a.tape();
    const int ia = a.id();
    return t.push(s * a.value(), t.requires_grad(a), [=](Tape& tp, int self) {
        tp.grad_ref(ia) += s * tp.grad_of(self);
    });
}

Var relu(Var a) {
    Tape& t = a.tape();
    const int ia = a.id();
    return t.push(a.value().cwiseMax(0.0), t.requires_grad(a), [=](Tape& tp, int self) {
        const Matrix& x = tp.value_of(ia);
        tp.grad_ref(ia) += (x.array() > 0.0).select(tp.grad_of(self), 0.0);
    });
}

Var softmax(Var a, double tau) {
    Tape& t = a.tape();
    const int ia = a.id();
    return t.push(row_softmax(a.value(), tau), t.requires_grad(a), [=](Tape& tp, int self) {
        const Matrix& y = tp.value_of(self);
        const Matrix& g = tp.grad_of(self);
        const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
        Matrix gx = g;
        gx.colwise() -= dots;
        tp.grad_ref(ia) += tau * y.cwiseProduct(gx);
    });
}

Var log_softmax(Var a, double tau) {
    Tape& t = a.tape();
    const int ia = a.id();
    Matrix y = tau * a.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        const double m = row.maxCoeff();
        const double lse = m + std::log((row.array() - m).max(kMinExponent).exp().sum());
        row.array() -= lse;
    }
    return t.push(std::move(y), t.requires_grad(a), [=](Tape& tp, int self) {
        const Matrix p = tp.value_of(self).array().max(kMinExponent).exp().matrix();
        const Matrix& g = tp.grad_of(self);
        const Eigen::VectorXd gs = g.rowwise().sum();
        Matrix gx = g;
        gx -= p.cwiseProduct(gs.replicate(1, p.cols()));
        tp.grad_ref(ia) += tau * gx;
    });
}

Var concat(std::span<const Var> parts) {
    require(!parts.empty(), "concat: no parts");
    Tape& t = parts[0].tape();
    const Eigen::Index rows = parts[0].rows();
    Eigen::Index cols = 0;
    bool any_grad = false;
    std::vector<int> ids;
    std::vector<Eigen::Index> widths;
    std::vector<bool> wants;
    for (const Var& p : parts) {
        require(&p.tape() == &t, "concat: operands live on different tapes");
        if (p.rows() != rows) throw std::invalid_argument("concat: row mismatch " + shape_of(p.value()));
        cols += p.cols();
        any_grad = any_grad || t.requires_grad(p);
        ids.push_back(p.id());
        widths.push_back(p.cols());
        wants.push_back(t.requires_grad(p));
    }
    Matrix out(rows, cols);
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return t.push(std::move(out), any_grad, [ids, widths, wants](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        Eigen::Index off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (wants[k]) tp.grad_ref(ids[k]) += g.middleCols(off, widths[k]);
            off += widths[k];
        }
    });
}

Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var sum(Var a) {
    Tape& t = a.tape();
    const int ia = a.id();
    return t.push(Matrix::Constant(1, 1, a.value().sum()), t.requires_grad(a), [=](Tape& tp, int self) {
        tp.grad_ref(ia).array() += tp.grad_of(self)(0, 0);
    });
}

Var mean(Var a) {
    require(a.value().size() > 0, "mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_mean(Var a) {
    Tape& t = a.tape();
    const int ia = a.id();
    const double n = static_cast<double>(a.cols());
    require(n > 0, "row_mean of empty rows");
    Matrix out = a.value().rowwise().mean();
    return t.push(std::move(out), t.requires_grad(a), [=](Tape& tp, int self) {
        Matrix& ga = tp.grad_ref(ia);
        ga += (tp.grad_of(self) / n).replicate(1, ga.cols());
    });
}

Var square(Var a) {
    Tape& t = a.tape();
    const int ia = a.id();
    return t.push(a.value().array().square().matrix(), t.requires_grad(a), [=](Tape& tp, int self) {
        tp.grad_ref(ia) += 2.0 * tp.value_of(ia).cwiseProduct(tp.grad_of(self));
    });
}

Var log(Var a) {
    Tape& t = a.tape();
    require((a.value().array() > 0.0).all(), "log of non-positive value");
    const int ia = a.id();
    return t.push(a.value().array().log().matrix(), t.requires_grad(a), [=](Tape& tp, int self) {
        tp.grad_ref(ia) += tp.grad_of(self).cwiseQuotient(tp.value_of(ia));
    });
}

Var entropy(Var p) {
    Tape& t = p.tape();
    require((p.value().array() >= 0.0).all(), "entropy of negative probability");
    const int ip = p.id();
    const Matrix& pv = p.value();
    Matrix out(pv.rows(), 1);
    for (Eigen::Index r = 0; r < pv.rows(); ++r) {
        double h = 0.0;
        for (Eigen::Index c = 0; c < pv.cols(); ++c)
            if (pv(r, c) > 0.0) h -= pv(r, c) * std::log(pv(r, c));
        out(r, 0) = h;
    }
    return t.push(std::move(out), t.requires_grad(p), [=](Tape& tp, int self) {
        const Matrix& x = tp.value_of(ip);
        const Matrix& g = tp.grad_of(self);
        Matrix& gp = tp.grad_ref(ip);
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            for (Eigen::Index c = 0; c < x.cols(); ++c)
                if (x(r, c) > 0.0) gp(r, c) -= g(r, 0) * (std::log(x(r, c)) + 1.0);
    });
}

Var gather(Var a, std::span<const int> index) {
    Tape& t = a.tape();
    const Matrix& av = a.value();
    require(static_cast<Eigen::Index>(index.size()) == av.rows(), "gather: one index per row");
    Matrix out(av.rows(), 1);
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
        const int c = index[static_cast<std::size_t>(r)];
        if (c < 0 || c >= av.cols()) throw std::invalid_argument("gather: index out of range");
        out(r, 0) = av(r, c);
    }
    const int ia = a.id();
    std::vector<int> idx(index.begin(), index.end());
    return t.push(std::move(out), t.requires_grad(a), [ia, idx](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        Matrix& ga = tp.grad_ref(ia);
        for (std::size_t r = 0; r < idx.size(); ++r) ga(static_cast<Eigen::Index>(r), idx[r]) += g(static_cast<Eigen::Index>(r), 0);
    });
}

Var select_rows(Var a, std::span<const int> rows) {
    Tape& t = a.tape();
    const Matrix& av = a.value();
    Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= av.rows()) throw std::invalid_argument("select_rows: index out of range");
        out.row(static_cast<Eigen::Index>(k)) = av.row(rows[k]);
    }
    const int ia = a.id();
    std::vector<int> idx(rows.begin(), rows.end());
    return t.push(std::move(out), t.requires_grad(a), [ia, idx](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        Matrix& ga = tp.grad_ref(ia);
        for (std::size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    });
}

Var stop_gradient(Var a) { return a.tape().constant(a.value()); }

Matrix attention_weights(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& t,
                         const AttentionMask& mask, double tau) {
    const int q = mask.rows, n = mask.cols;
    require(s.rows() == q && t.rows() == n && s.cols() == t.cols(), "attention_weights: shape mismatch");
    Matrix e;
    e.noalias() = s.lazyProduct(t.transpose());
    Matrix a = Matrix::Zero(q, n);
    for (int i = 0; i < q; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            if (mask(i, j)) m = std::max(m, tau * e(i, j));
        require(m > -std::numeric_limits<double>::infinity(), "attention_weights: query without keys");
        double z = 0.0;
        for (int j = 0; j < n; ++j)
            if (mask(i, j)) z += (a(i, j) = std::exp(std::max(tau * e(i, j) - m, kMinExponent)));
        a.row(i) /= z;
    }
    return a;
}

Var masked_attention(Var s, Var t, Var c, const AttentionMask& mask, int heads, double tau) {
    require_same_tape(s, t);
    require_same_tape(s, c);
    Tape& tape = s.tape();
    const int q = mask.rows, n = mask.cols;
    require(q > 0 && n > 0 && heads > 0, "masked_attention: empty mask or no heads");
    require(mask.edges.size() == static_cast<std::size_t>(q) * static_cast<std::size_t>(n), "masked_attention: bad mask");
    const Matrix& sv = s.value();
    const Matrix& tv = t.value();
    const Matrix& cv = c.value();
    require(tv.rows() == cv.rows() && tv.rows() % n == 0, "masked_attention: key row mismatch");
    const Eigen::Index graphs = tv.rows() / n;
    require(sv.rows() == graphs * q, "masked_attention: query row mismatch");
    require(sv.cols() == tv.cols() && sv.cols() % heads == 0 && cv.cols() % heads == 0,
            "masked_attention: head widths");
    const Eigen::Index p = sv.cols() / heads;
    const Eigen::Index w = cv.cols() / heads;

    // Per-head blocks are a few rows wide, so the kernel works on the raw
    // row-major buffers instead of allocating Eigen temporaries per block.
    const auto qn = static_cast<std::size_t>(q) * static_cast<std::size_t>(n);
    auto weights = std::make_shared<std::vector<double>>(static_cast<std::size_t>(graphs * heads) * qn, 0.0);
    Matrix out = Matrix::Zero(sv.rows(), cv.cols());
    const Eigen::Index ds = sv.cols(), dc = cv.cols();
    std::vector<double> logits(static_cast<std::size_t>(n));
    for (Eigen::Index b = 0; b < graphs; ++b) {
        for (int h = 0; h < heads; ++h) {
            double* A = weights->data() + static_cast<std::size_t>(b * heads + h) * qn;
            for (int i = 0; i < q; ++i) {
                const double* si = sv.data() + (b * q + i) * ds + h * p;
                double m = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j) {
                    if (!mask(i, j)) continue;
                    const double* tj = tv.data() + (b * n + j) * ds + h * p;
                    double e = 0.0;
                    for (Eigen::Index k = 0; k < p; ++k) e += si[k] * tj[k];
                    logits[static_cast<std::size_t>(j)] = tau * e;
                    m = std::max(m, tau * e);
                }
                require(m > -std::numeric_limits<double>::infinity(), "attention_weights: query without keys");
                double z = 0.0;
                double* ai = A + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
                for (int j = 0; j < n; ++j)
                    if (mask(i, j)) z += (ai[j] = std::exp(std::max(logits[static_cast<std::size_t>(j)] - m, kMinExponent)));
                double* oi = out.data() + (b * q + i) * dc + h * w;
                for (int j = 0; j < n; ++j) {
                    if (!mask(i, j)) continue;
                    ai[j] /= z;
                    const double* cj = cv.data() + (b * n + j) * dc + h * w;
                    for (Eigen::Index c = 0; c < w; ++c) oi[c] += ai[j] * cj[c];
                }
            }
        }
    }
    const int is = s.id(), it = t.id(), ic = c.id();
    const bool gs = tape.requires_grad(s), gt = tape.requires_grad(t), gc = tape.requires_grad(c);
    return tape.push(std::move(out), gs || gt || gc, [=](Tape& tp, int self) {
        const Matrix& g = tp.grad_of(self);
        const Matrix& S = tp.value_of(is);
        const Matrix& T = tp.value_of(it);
        const Matrix& C = tp.value_of(ic);
        double* dS = gs ? tp.grad_ref(is).data() : nullptr;
        double* dT = gt ? tp.grad_ref(it).data() : nullptr;
        double* dC = gc ? tp.grad_ref(ic).data() : nullptr;
        std::vector<double> dE(qn);
        for (Eigen::Index b = 0; b < graphs; ++b) {
            for (int h = 0; h < heads; ++h) {
                const double* A = weights->data() + static_cast<std::size_t>(b * heads + h) * qn;
                for (int i = 0; i < q; ++i) {
                    const double* gi = g.data() + (b * q + i) * dc + h * w;
                    const double* ai = A + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
                    double* ei = dE.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
                    double dot = 0.0;
                    for (int j = 0; j < n; ++j) {
                        ei[j] = 0.0;
                        if (ai[j] == 0.0) continue;
                        const Eigen::Index row = (b * n + j) * dc + h * w;
                        const double* cj = C.data() + row;
                        double da = 0.0;
                        for (Eigen::Index c = 0; c < w; ++c) da += gi[c] * cj[c];
                        if (dC)
                            for (Eigen::Index c = 0; c < w; ++c) dC[row + c] += ai[j] * gi[c];
                        ei[j] = da;
                        dot += da * ai[j];
                    }
                    for (int j = 0; j < n; ++j) ei[j] = tau * ai[j] * (ei[j] - dot);
                }
                if (!dS && !dT) continue;
                for (int i = 0; i < q; ++i) {
                    const Eigen::Index srow = (b * q + i) * ds + h * p;
                    const double* ei = dE.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
                    for (int j = 0; j < n; ++j) {
                        if (ei[j] == 0.0) continue;
                        const Eigen::Index trow = (b * n + j) * ds + h * p;
                        for (Eigen::Index k = 0; k < p; ++k) {
                            if (dS) dS[srow + k] += ei[j] * T.data()[trow + k];
                            if (dT) dT[trow + k] += ei[j] * S.data()[srow + k];
                        }
                    }
                }
            }
        }
    });
}

Adam::Adam(std::vector<Parameter*> params, Options opt) : params_(std::move(params)), opt_(opt) {
    for (Parameter* p : params_) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * p.grad;
        v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= opt_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opt_.eps);
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'T', 'L'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("checkpoint: truncated tensor file");
    return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& dir, std::span<const NamedTensor> tensors,
                     const std::string& meta_json) {
    std::filesystem::create_directories(dir);
    const auto bin_path = dir / "tensors.bin";
    std::ofstream os(bin_path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + bin_path.string());
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));

    nlohmann::json manifest;
    manifest["format"] = "gatslice-tensors";
    manifest["version"] = kVersion;
    manifest["file"] = "tensors.bin";
    manifest["tensors"] = nlohmann::json::array();
    for (const NamedTensor& t : tensors) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(t.value.rows()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(t.value.cols()));
        const auto offset = static_cast<std::uint64_t>(os.tellp());
        os.write(reinterpret_cast<const char*>(t.value.data()),
                 static_cast<std::streamsize>(t.value.size() * static_cast<Eigen::Index>(sizeof(double))));
        manifest["tensors"].push_back(
            {{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"offset", offset}});
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + bin_path.string());
    manifest["meta"] = nlohmann::json::parse(meta_json);
    std::ofstream ms(dir / "manifest.json", std::ios::trunc);
    ms << manifest.dump(2) << '\n';
    if (!ms) throw std::runtime_error("checkpoint: cannot write manifest in " + dir.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& dir) {
    const auto bin_path = dir / "tensors.bin";
    std::ifstream is(bin_path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + bin_path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic in " + bin_path.string());
    if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    const auto count = get<std::uint32_t>(is);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedTensor t;
        t.name.resize(get<std::uint32_t>(is));
        is.read(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        const auto rows = get<std::uint32_t>(is);
        const auto cols = get<std::uint32_t>(is);
        t.value.resize(rows, cols);
        is.read(reinterpret_cast<char*>(t.value.data()),
                static_cast<std::streamsize>(t.value.size() * static_cast<Eigen::Index>(sizeof(double))));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor " + t.name);
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace gatslice::tl
