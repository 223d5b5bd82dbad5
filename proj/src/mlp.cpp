#include "physgrid/mlp.hpp"

#include <cmath>

#include "physgrid/errors.hpp"
#include "physgrid/rng.hpp"

namespace physgrid {

std::size_t Mlp::param_count(std::span<const std::size_t> widths) {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) count += widths[l] * widths[l + 1] + widths[l + 1];
    return count;
}

Mlp::Mlp(std::vector<std::size_t> widths, std::vector<double> params)
    : Mlp(std::move(widths), Buffer(params.begin(), params.end())) {}

Mlp::Mlp(std::vector<std::size_t> widths, Buffer params) : widths_(std::move(widths)), params_(std::move(params)) {
    layout();
    if (params_.size() != param_count(widths_)) {
        throw UsageError("mlp: expected " + std::to_string(param_count(widths_)) + " parameters, got " +
                         std::to_string(params_.size()));
    }
}

void Mlp::layout() {
    if (widths_.size() < 2) throw UsageError("mlp: need at least an input and an output width");
    for (std::size_t w : widths_) {
        if (w == 0) throw UsageError("mlp: layer width must be positive");
    }
    offsets_.resize(layers());
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers(); ++l) {
        offsets_[l] = offset;
        offset += widths_[l] * widths_[l + 1] + widths_[l + 1];
    }
}

Mlp Mlp::xavier(std::vector<std::size_t> widths, std::uint64_t seed) {
    Mlp net;
    net.widths_ = std::move(widths);
    net.layout();
    net.params_.assign(param_count(net.widths_), 0.0);
    Rng rng(seed);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        const double fan_in = static_cast<double>(net.widths_[l]);
        const double fan_out = static_cast<double>(net.widths_[l + 1]);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        const std::size_t n = net.widths_[l] * net.widths_[l + 1];
        for (std::size_t i = 0; i < n; ++i) net.params_[net.offsets_[l] + i] = rng.uniform(-limit, limit);
    }
    return net;
}

Tensor Mlp::weight(std::size_t layer) const {
    const std::size_t r = widths_[layer], c = widths_[layer + 1];
    const auto begin = params_.begin() + static_cast<std::ptrdiff_t>(offsets_[layer]);
    return Tensor(Shape{r, c}, Buffer(begin, begin + static_cast<std::ptrdiff_t>(r * c)));
}

Tensor Mlp::bias(std::size_t layer) const {
    const std::size_t c = widths_[layer + 1];
    const auto begin = params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(layer));
    return Tensor(Shape{1, c}, Buffer(begin, begin + static_cast<std::ptrdiff_t>(c)));
}

Mlp::Bound Mlp::bind(ad::Tape& tape, bool trainable) const {
    Bound b;
    b.weights.reserve(layers());
    b.biases.reserve(layers());
    for (std::size_t l = 0; l < layers(); ++l) {
        b.weights.push_back(trainable ? tape.leaf(weight(l)) : tape.constant(weight(l)));
        b.biases.push_back(trainable ? tape.leaf(bias(l)) : tape.constant(bias(l)));
    }
    return b;
}

std::vector<double> Mlp::gradient(const ad::Tape& tape, const Bound& bound, ad::Var loss) const {
    std::vector<ad::Var> wrt;
    wrt.reserve(2 * layers());
    for (std::size_t l = 0; l < layers(); ++l) {
        wrt.push_back(bound.weights[l]);
        wrt.push_back(bound.biases[l]);
    }
    const std::vector<Tensor> grads = tape.grad(loss, wrt);
    std::vector<double> flat(params_.size(), 0.0);
    for (std::size_t l = 0; l < layers(); ++l) {
        const Tensor& gw = grads[2 * l];
        const Tensor& gb = grads[2 * l + 1];
        std::copy(gw.storage().begin(), gw.storage().end(), flat.begin() + static_cast<std::ptrdiff_t>(offsets_[l]));
        std::copy(gb.storage().begin(), gb.storage().end(),
                  flat.begin() + static_cast<std::ptrdiff_t>(bias_offset(l)));
    }
    return flat;
}

std::vector<ad::Var> Mlp::parameter_vars(const Bound& bound) {
    std::vector<ad::Var> out;
    out.reserve(2 * bound.weights.size());
    for (std::size_t l = 0; l < bound.weights.size(); ++l) {
        out.push_back(bound.weights[l]);
        out.push_back(bound.biases[l]);
    }
    return out;
}

void Mlp::accumulate(std::span<const Tensor> grads, std::span<double> flat) const {
    if (grads.size() != 2 * layers() || flat.size() != params_.size()) {
        throw ShapeError("mlp: gradient layout does not match the network");
    }
    for (std::size_t l = 0; l < layers(); ++l) {
        const auto& gw = grads[2 * l].storage();
        const auto& gb = grads[2 * l + 1].storage();
        double* w = flat.data() + offsets_[l];
        double* b = flat.data() + bias_offset(l);
        for (std::size_t i = 0; i < gw.size(); ++i) w[i] += gw[i];
        for (std::size_t i = 0; i < gb.size(); ++i) b[i] += gb[i];
    }
}

ad::Var Mlp::forward(ad::Tape& tape, const Bound& bound, ad::Var input) const {
    ad::Var h = input;
    for (std::size_t l = 0; l < layers(); ++l) {
        h = tape.add_row(tape.matmul(h, bound.weights[l]), bound.biases[l]);
        if (l + 1 < layers()) h = tape.tanh(h);
    }
    return h;
}

Tensor Mlp::evaluate(const Tensor& input) const {
    if (input.cols() != input_width()) {
        throw ShapeError("mlp: input has " + std::to_string(input.cols()) + " columns, network expects " +
                         std::to_string(input_width()));
    }
    RowMatrix h = input.mat();
    for (std::size_t l = 0; l < layers(); ++l) {
        const ConstMatrixMap w(params_.data() + offsets_[l], static_cast<Eigen::Index>(widths_[l]),
                               static_cast<Eigen::Index>(widths_[l + 1]));
        const ConstMatrixMap b(params_.data() + bias_offset(l), 1, static_cast<Eigen::Index>(widths_[l + 1]));
        RowMatrix next = h * w;
        next.rowwise() += b.row(0);
        if (l + 1 < layers()) ad::tanh_inplace(std::span<double>(next.data(), static_cast<std::size_t>(next.size())));
        h = std::move(next);
    }
    Tensor out = Tensor::matrix(input.rows(), output_width());
    out.mat() = h;
    if (!out.all_finite()) throw NumericalError("mlp: evaluation produced a non-finite value");
    return out;
}

}  // namespace physgrid
