#include "physgrid/tape.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "physgrid/errors.hpp"

namespace physgrid::ad {

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Constant: return "constant";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::AddScalar: return "add_scalar";
        case Op::MulScalar: return "mul_scalar";
        case Op::MatMul: return "matmul";
        case Op::AddRow: return "add_row";
        case Op::BroadcastRows: return "broadcast_rows";
        case Op::Tanh: return "tanh";
        case Op::Square: return "square";
        case Op::Sum: return "sum";
        case Op::Row: return "row";
        case Op::Col: return "col";
        case Op::GatherRows: return "gather_rows";
    }
    return "?";
}

void tanh_inplace(std::span<double> values) {
    Eigen::Map<Eigen::ArrayXd> a(values.data(), static_cast<Eigen::Index>(values.size()));
    a = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

namespace {

Shape matrix_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

[[noreturn]] void shape_mismatch(Op op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
}

void require_same(Op op, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() != b.size()) shape_mismatch(op, a, b);
}

void add_into(Tensor& dst, const Tensor& src) {
    if (dst.empty() && src.size() > 0) {
        dst = src;
        return;
    }
    dst.mat() += src.mat();
}

// Result tensors keep the first operand's shape so rank is preserved through
// elementwise chains.
Tensor like(const Tensor& t) { return Tensor(t.shape()); }

}  // namespace

const Tape::Node& Tape::node(Var v) const {
    if (!owns(v)) throw UsageError("tape: variable was not recorded on this tape");
    return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Op Tape::op(Var v) const { return node(v).op; }

Var Tape::push(Node n) {
    if (n.op != Op::Leaf && n.op != Op::Constant) {
        n.value = compute(n);
        if (!n.value.all_finite()) {
            throw NumericalError(std::string(op_name(n.op)) + ": produced a non-finite value");
        }
        n.needs_grad = nodes_[n.a].needs_grad;
        if (n.op == Op::Add || n.op == Op::Sub || n.op == Op::Mul || n.op == Op::MulScalar || n.op == Op::MatMul ||
            n.op == Op::AddRow) {
            n.needs_grad = n.needs_grad || nodes_[n.b].needs_grad;
        }
    } else if (!n.value.all_finite()) {
        throw NumericalError(std::string(op_name(n.op)) + ": input contains a non-finite value");
    }
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::Leaf;
    n.needs_grad = true;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::constant(Tensor value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Tensor Tape::compute(const Node& n) const {
    const Tensor& a = nodes_[n.a].value;
    switch (n.op) {
        case Op::Leaf:
        case Op::Constant: return n.value;
        case Op::Add: {
            const Tensor& b = nodes_[n.b].value;
            require_same(n.op, a, b);
            Tensor out = like(a);
            out.mat() = a.mat() + b.mat();
            return out;
        }
        case Op::Sub: {
            const Tensor& b = nodes_[n.b].value;
            require_same(n.op, a, b);
            Tensor out = like(a);
            out.mat() = a.mat() - b.mat();
            return out;
        }
        case Op::Mul: {
            const Tensor& b = nodes_[n.b].value;
            require_same(n.op, a, b);
            Tensor out = like(a);
            out.mat() = a.mat().cwiseProduct(b.mat());
            return out;
        }
        case Op::Scale: {
            Tensor out = like(a);
            out.mat() = a.mat() * n.c;
            return out;
        }
        case Op::AddScalar: {
            Tensor out = like(a);
            out.mat() = a.mat().array() + n.c;
            return out;
        }
        case Op::MulScalar: {
            const Tensor& s = nodes_[n.b].value;
            if (s.size() != 1) shape_mismatch(n.op, a, s);
            Tensor out = like(a);
            out.mat() = a.mat() * s[0];
            return out;
        }
        case Op::MatMul: {
            const Tensor& b = nodes_[n.b].value;
            if (a.cols() != b.rows()) shape_mismatch(n.op, a, b);
            Tensor out(matrix_shape(a.rows(), b.cols()));
            out.mat().noalias() = a.mat() * b.mat();
            return out;
        }
        case Op::AddRow: {
            const Tensor& r = nodes_[n.b].value;
            if (r.rows() != 1 || r.cols() != a.cols()) shape_mismatch(n.op, a, r);
            Tensor out = like(a);
            out.mat() = a.mat().rowwise() + r.mat().row(0);
            return out;
        }
        case Op::BroadcastRows: {
            if (a.rows() != 1) throw ShapeError("broadcast_rows: expected a single row, got " + shape_string(a.shape()));
            Tensor out(matrix_shape(n.n, a.cols()));
            out.mat() = a.mat().replicate(static_cast<Eigen::Index>(n.n), 1);
            return out;
        }
        case Op::Tanh: {
            Tensor out = a;
            tanh_inplace(out.data());
            return out;
        }
        case Op::Square: {
            Tensor out = like(a);
            out.mat() = a.mat().cwiseAbs2();
            return out;
        }
        case Op::Sum: return Tensor::scalar(a.mat().sum());
        case Op::Row: {
            if (n.n >= a.rows()) {
                throw ShapeError("row: index " + std::to_string(n.n) + " out of range for " + shape_string(a.shape()));
            }
            Tensor out(matrix_shape(1, a.cols()));
            out.mat() = a.mat().row(static_cast<Eigen::Index>(n.n));
            return out;
        }
        case Op::Col: {
            if (n.n >= a.cols()) {
                throw ShapeError("col: index " + std::to_string(n.n) + " out of range for " + shape_string(a.shape()));
            }
            Tensor out(matrix_shape(a.rows(), 1));
            out.mat() = a.mat().col(static_cast<Eigen::Index>(n.n));
            return out;
        }
        case Op::GatherRows: {
            Tensor out(matrix_shape(n.index.size(), a.cols()));
            for (std::size_t k = 0; k < n.index.size(); ++k) {
                if (n.index[k] >= a.rows()) {
                    throw ShapeError("gather_rows: index " + std::to_string(n.index[k]) + " out of range for " +
                                     shape_string(a.shape()));
                }
                out.mat().row(static_cast<Eigen::Index>(k)) = a.mat().row(n.index[k]);
            }
            return out;
        }
    }
    throw UsageError("tape: unknown op");
}

namespace {

template <class N>
N binary(Op op, Var a, Var b) {
    N n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    return n;
}

}  // namespace

Var Tape::add(Var a, Var b) {
    node(a), node(b);
    return push(binary<Node>(Op::Add, a, b));
}

Var Tape::sub(Var a, Var b) {
    node(a), node(b);
    return push(binary<Node>(Op::Sub, a, b));
}

Var Tape::mul(Var a, Var b) {
    node(a), node(b);
    return push(binary<Node>(Op::Mul, a, b));
}

Var Tape::mul_scalar(Var a, Var s) {
    node(a), node(s);
    return push(binary<Node>(Op::MulScalar, a, s));
}

Var Tape::matmul(Var a, Var b) {
    node(a), node(b);
    return push(binary<Node>(Op::MatMul, a, b));
}

Var Tape::add_row(Var a, Var row) {
    node(a), node(row);
    return push(binary<Node>(Op::AddRow, a, row));
}

Var Tape::scale(Var a, double c) {
    node(a);
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.c = c;
    return push(std::move(n));
}

Var Tape::add_scalar(Var a, double c) {
    node(a);
    Node n;
    n.op = Op::AddScalar;
    n.a = a.id;
    n.c = c;
    return push(std::move(n));
}

Var Tape::broadcast_rows(Var row, std::size_t rows) {
    node(row);
    Node n;
    n.op = Op::BroadcastRows;
    n.a = row.id;
    n.n = rows;
    return push(std::move(n));
}

Var Tape::tanh(Var a) {
    node(a);
    Node n;
    n.op = Op::Tanh;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::square(Var a) {
    node(a);
    Node n;
    n.op = Op::Square;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    node(a);
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    return push(std::move(n));
}

Var Tape::row(Var a, std::size_t i) {
    node(a);
    Node n;
    n.op = Op::Row;
    n.a = a.id;
    n.n = i;
    return push(std::move(n));
}

Var Tape::col(Var a, std::size_t j) {
    node(a);
    Node n;
    n.op = Op::Col;
    n.a = a.id;
    n.n = j;
    return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<std::uint32_t> index) {
    node(a);
    Node n;
    n.op = Op::GatherRows;
    n.a = a.id;
    n.index = std::move(index);
    return push(std::move(n));
}

void Tape::backward_node(std::uint32_t id, const Tensor& g, std::vector<Tensor>& grads) const {
    const Node& n = nodes_[id];
    const Node& na = nodes_[n.a];
    const bool ga = na.needs_grad;
    const bool gb = (n.op == Op::Add || n.op == Op::Sub || n.op == Op::Mul || n.op == Op::MulScalar ||
                     n.op == Op::MatMul || n.op == Op::AddRow) &&
                    nodes_[n.b].needs_grad;
    switch (n.op) {
        case Op::Leaf:
        case Op::Constant: return;
        case Op::Add:
            if (ga) add_into(grads[n.a], g);
            if (gb) add_into(grads[n.b], g);
            return;
        case Op::Sub:
            if (ga) add_into(grads[n.a], g);
            if (gb) {
                Tensor d = like(g);
                d.mat() = -g.mat();
                add_into(grads[n.b], d);
            }
            return;
        case Op::Mul: {
            const Tensor& b = nodes_[n.b].value;
            if (ga) {
                Tensor d = like(na.value);
                d.mat() = g.mat().cwiseProduct(b.mat());
                add_into(grads[n.a], d);
            }
            if (gb) {
                Tensor d = like(b);
                d.mat() = g.mat().cwiseProduct(na.value.mat());
                add_into(grads[n.b], d);
            }
            return;
        }
        case Op::Scale: {
            if (!ga) return;
            Tensor d = like(na.value);
            d.mat() = g.mat() * n.c;
            add_into(grads[n.a], d);
            return;
        }
        case Op::AddScalar:
            if (ga) add_into(grads[n.a], g);
            return;
        case Op::MulScalar: {
            const Tensor& s = nodes_[n.b].value;
            if (ga) {
                Tensor d = like(na.value);
                d.mat() = g.mat() * s[0];
                add_into(grads[n.a], d);
            }
            if (gb) {
                Tensor d = like(s);
                d[0] = g.mat().cwiseProduct(na.value.mat()).sum();
                add_into(grads[n.b], d);
            }
            return;
        }
        case Op::MatMul: {
            const Tensor& b = nodes_[n.b].value;
            if (ga) {
                Tensor d = like(na.value);
                d.mat().noalias() = g.mat() * b.mat().transpose();
                add_into(grads[n.a], d);
            }
            if (gb) {
                Tensor d = like(b);
                d.mat().noalias() = na.value.mat().transpose() * g.mat();
                add_into(grads[n.b], d);
            }
            return;
        }
        case Op::AddRow: {
            if (ga) add_into(grads[n.a], g);
            if (gb) {
                Tensor d = like(nodes_[n.b].value);
                d.mat() = g.mat().colwise().sum();
                add_into(grads[n.b], d);
            }
            return;
        }
        case Op::BroadcastRows: {
            if (!ga) return;
            Tensor d = like(na.value);
            d.mat() = g.mat().colwise().sum();
            add_into(grads[n.a], d);
            return;
        }
        case Op::Tanh: {
            if (!ga) return;
            Tensor d = like(na.value);
            d.mat() = g.mat().array() * (1.0 - n.value.mat().array().square());
            add_into(grads[n.a], d);
            return;
        }
        case Op::Square: {
            if (!ga) return;
            Tensor d = like(na.value);
            d.mat() = 2.0 * g.mat().cwiseProduct(na.value.mat());
            add_into(grads[n.a], d);
            return;
        }
        case Op::Sum: {
            if (!ga) return;
            Tensor d(na.value.shape(), g[0]);
            add_into(grads[n.a], d);
            return;
        }
        case Op::Row: {
            if (!ga) return;
            Tensor d = like(na.value);
            d.mat().row(static_cast<Eigen::Index>(n.n)) = g.mat().row(0);
            add_into(grads[n.a], d);
            return;
        }
        case Op::Col: {
            if (!ga) return;
            Tensor d = like(na.value);
            d.mat().col(static_cast<Eigen::Index>(n.n)) = g.mat().col(0);
            add_into(grads[n.a], d);
            return;
        }
        case Op::GatherRows: {
            if (!ga) return;
            Tensor d = like(na.value);
            auto dm = d.mat();
            const auto gm = g.mat();
            for (std::size_t k = 0; k < n.index.size(); ++k) {
                dm.row(n.index[k]) += gm.row(static_cast<Eigen::Index>(k));
            }
            add_into(grads[n.a], d);
            return;
        }
    }
}

std::vector<Tensor> Tape::grad(Var output, std::span<const Var> wrt) const {
    const Node& out = node(output);
    if (out.value.size() != 1) {
        throw ShapeError("grad: output must be a scalar, got " + shape_string(out.value.shape()));
    }
    for (const Var& w : wrt) {
        if (!owns(w)) throw UsageError("grad: requested tensor was not recorded on this tape");
    }
    std::vector<Tensor> grads(output.id + 1);
    grads[output.id] = Tensor(out.value.shape(), 1.0);
    last_visits_ = 0;
    for (std::uint32_t id = output.id + 1; id-- > 0;) {
        if (grads[id].empty() || !nodes_[id].needs_grad) continue;
        ++last_visits_;
        backward_node(id, grads[id], grads);
        // Interior gradients are dead once propagated.
        if (nodes_[id].op != Op::Leaf && nodes_[id].op != Op::Constant) {
            bool requested = false;
            for (const Var& w : wrt) requested = requested || w.id == id;
            if (!requested) grads[id] = Tensor();
        }
    }
    std::vector<Tensor> result;
    result.reserve(wrt.size());
    for (const Var& w : wrt) {
        if (w.id <= output.id && !grads[w.id].empty()) {
            result.push_back(grads[w.id]);
        } else {
            result.emplace_back(nodes_[w.id].value.shape(), 0.0);
        }
    }
    return result;
}

Tensor Tape::grad(Var output, Var wrt) const {
    const Var one[] = {wrt};
    return std::move(grad(output, one)[0]);
}

bool Tape::replay_matches() const {
    for (const Node& n : nodes_) {
        if (n.op == Op::Leaf || n.op == Op::Constant) continue;
        if (!compute(n).bit_equal(n.value)) return false;
    }
    return true;
}

Var forward(Tape& tape, const Expression& expression, std::span<const Tensor> inputs, std::vector<Var>* leaves) {
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
    Var out = expression(tape, vars);
    if (leaves) *leaves = std::move(vars);
    return out;
}

}  // namespace physgrid::ad
