#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "physgrid/rng.hpp"
#include "physgrid/tape.hpp"

namespace gradcheck {

using physgrid::Tensor;
using physgrid::ad::Tape;
using physgrid::ad::Var;

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline Tensor random_tensor(std::size_t rows, std::size_t cols, physgrid::Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::matrix(rows, cols);
    for (double& v : t.storage()) v = rng.uniform(-scale, scale);
    return t;
}

/// Scalar probe: sum(op(inputs) * weights), weights fixed per call.
inline double probe(const Builder& op, const std::vector<Tensor>& inputs, const Tensor* weights, Tape& tape,
                    std::vector<Var>& leaves, Var& loss) {
    leaves.clear();
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    Var out = op(tape, leaves);
    if (weights && weights->size() == tape.value(out).size()) out = tape.mul(out, tape.constant(*weights));
    loss = tape.sum(out);
    return tape.value(loss).item();
}

/// Largest relative gap between reverse-mode and central differences over
/// every input element. Relative to max(|analytic|, |numeric|, floor).
inline double max_relative_error(const Builder& op, std::vector<Tensor> inputs, physgrid::Rng& rng, double step = 1e-5,
                                 double floor = 1e-2) {
    Tensor weights;
    {
        Tape t;
        std::vector<Var> leaves;
        for (const Tensor& x : inputs) leaves.push_back(t.leaf(x));
        const Tensor& out = t.value(op(t, leaves));
        weights = Tensor::matrix(out.rows(), out.cols());
        for (double& w : weights.storage()) w = rng.uniform(0.5, 1.5);
    }
    Tape tape;
    std::vector<Var> leaves;
    Var loss;
    probe(op, inputs, &weights, tape, leaves, loss);
    const std::vector<Tensor> grads = tape.grad(loss, leaves);

    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t e = 0; e < inputs[i].size(); ++e) {
            const double keep = inputs[i][e];
            inputs[i][e] = keep + step;
            Tape tp;
            std::vector<Var> lp;
            Var l;
            const double up = probe(op, inputs, &weights, tp, lp, l);
            inputs[i][e] = keep - step;
            Tape tm;
            const double down = probe(op, inputs, &weights, tm, lp, l);
            inputs[i][e] = keep;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grads[i][e];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

struct PrimitiveCase {
    const char* name;
    std::function<std::vector<Tensor>(physgrid::Rng&)> inputs;
    Builder op;
};

/// One case per tape primitive, inputs drawn with random shapes.
inline std::vector<PrimitiveCase> primitive_cases() {
    auto shape = [](physgrid::Rng& r) { return std::pair<std::size_t, std::size_t>(1 + r.below(4), 1 + r.below(4)); };
    return {
        {"add", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r), random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); }},
        {"sub", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r), random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.sub(v[0], v[1]); }},
        {"mul", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r), random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.mul(v[0], v[1]); }},
        {"scale", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.scale(v[0], -1.75); }},
        {"add_scalar", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.add_scalar(v[0], 0.4); }},
        {"mul_scalar",
         [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r), random_tensor(1, 1, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.mul_scalar(v[0], v[1]); }},
        {"matmul",
         [shape](physgrid::Rng& r) {
             auto [m, n] = shape(r);
             const std::size_t k = 1 + r.below(4);
             return std::vector{random_tensor(m, k, r), random_tensor(k, n, r)};
         },
         [](Tape& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); }},
        {"add_row", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r), random_tensor(1, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.add_row(v[0], v[1]); }},
        {"broadcast_rows", [shape](physgrid::Rng& r) { return std::vector{random_tensor(1, 1 + r.below(4), r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.broadcast_rows(v[0], 3); }},
        {"tanh", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r, 2.0)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.tanh(v[0]); }},
        {"square", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.square(v[0]); }},
        {"sum", [shape](physgrid::Rng& r) { auto [m, n] = shape(r); return std::vector{random_tensor(m, n, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.sum(v[0]); }},
        {"row", [shape](physgrid::Rng& r) { return std::vector{random_tensor(3, 1 + r.below(4), r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.row(v[0], 1); }},
        {"col", [shape](physgrid::Rng& r) { return std::vector{random_tensor(1 + r.below(4), 3, r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.col(v[0], 2); }},
        {"gather_rows", [shape](physgrid::Rng& r) { return std::vector{random_tensor(4, 1 + r.below(3), r)}; },
         [](Tape& t, const std::vector<Var>& v) { return t.gather_rows(v[0], {3, 0, 3, 1}); }},
    };
}

}  // namespace gradcheck
