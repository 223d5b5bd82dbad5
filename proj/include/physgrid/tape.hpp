#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "physgrid/tensor.hpp"

namespace physgrid::ad {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
    const Tape* tape = nullptr;
    std::uint32_t id = 0;
};

enum class Op : std::uint8_t {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Scale,
    AddScalar,
    MulScalar,
    MatMul,
    AddRow,
    BroadcastRows,
    Tanh,
    Square,
    Sum,
    Row,
    Col,
    GatherRows,
};

const char* op_name(Op op);

/// Append-only record of primitive tensor operations with reverse-mode
/// differentiation.
///
/// Every op validates shapes and rejects non-finite results. Broadcasting is
/// limited to scalar x tensor (MulScalar) and a row vector added to each row
/// (AddRow); everything else is shape-exact.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    /// Differentiable input.
    Var leaf(Tensor value);
    /// Input that never receives a gradient.
    Var constant(Tensor value);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    /// Scalar node times tensor.
    Var mul_scalar(Var a, Var s);
    Var matmul(Var a, Var b);
    /// a (r x c) plus row vector (1 x c) on every row.
    Var add_row(Var a, Var row);
    /// Repeats a 1 x c row to rows x c.
    Var broadcast_rows(Var row, std::size_t rows);
    Var tanh(Var a);
    Var square(Var a);
    /// Sum of all elements, as a scalar.
    Var sum(Var a);
    /// Row i of a matrix as 1 x c.
    Var row(Var a, std::size_t i);
    /// Column j of a matrix as r x 1.
    Var col(Var a, std::size_t j);
    /// out[k] = a[index[k]] row-wise.
    Var gather_rows(Var a, std::vector<std::uint32_t> index);

    const Tensor& value(Var v) const;
    Op op(Var v) const;
    std::size_t size() const { return nodes_.size(); }
    bool owns(Var v) const { return v.tape == this && v.id < nodes_.size(); }

    /// Gradients of a scalar output with respect to each requested node.
    std::vector<Tensor> grad(Var output, std::span<const Var> wrt) const;
    Tensor grad(Var output, Var wrt) const;

    /// Nodes processed by the most recent backward pass.
    std::size_t last_backward_visits() const { return last_visits_; }

    /// Recomputes every non-input node from its recorded inputs and reports
    /// whether all values reproduce bit for bit.
    bool replay_matches() const;

private:
    struct Node {
        Op op = Op::Leaf;
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        double c = 0.0;
        std::size_t n = 0;
        std::vector<std::uint32_t> index;
        bool needs_grad = false;
        Tensor value;
    };

    const Node& node(Var v) const;
    Var push(Node node);
    Tensor compute(const Node& node) const;
    void backward_node(std::uint32_t id, const Tensor& g, std::vector<Tensor>& grads) const;

    std::vector<Node> nodes_;
    mutable std::size_t last_visits_ = 0;
};

/// Builds an expression on `tape` from leaves holding `inputs`; the leaves are
/// written to `leaves` so callers can request gradients against them.
using Expression = std::function<Var(Tape&, std::span<const Var>)>;
Var forward(Tape& tape, const Expression& expression, std::span<const Tensor> inputs, std::vector<Var>* leaves = nullptr);

/// 1 - 2 / (exp(2x) + 1); exact at 0 and saturates cleanly.
void tanh_inplace(std::span<double> values);

}  // namespace physgrid::ad
