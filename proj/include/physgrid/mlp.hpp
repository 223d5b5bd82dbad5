#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "physgrid/tape.hpp"
#include "physgrid/tensor.hpp"

namespace physgrid {

/// Fully connected tanh network with a linear output layer.
///
/// Parameters live in one flat vector, layer by layer: the weight matrix
/// (fan_in x fan_out, row-major) followed by the bias row.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<std::size_t> widths, std::vector<double> params);
    Mlp(std::vector<std::size_t> widths, Buffer params);

    /// Xavier-uniform weights, zero biases.
    static Mlp xavier(std::vector<std::size_t> widths, std::uint64_t seed);
    static std::size_t param_count(std::span<const std::size_t> widths);

    const std::vector<std::size_t>& widths() const { return widths_; }
    Buffer& params() { return params_; }
    const Buffer& params() const { return params_; }
    std::size_t layers() const { return widths_.size() - 1; }
    std::size_t input_width() const { return widths_.front(); }
    std::size_t output_width() const { return widths_.back(); }
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_[layer] + widths_[layer] * widths_[layer + 1];
    }

    Tensor weight(std::size_t layer) const;
    Tensor bias(std::size_t layer) const;

    /// Parameters recorded on a tape as leaves (trainable) or constants.
    struct Bound {
        std::vector<ad::Var> weights;
        std::vector<ad::Var> biases;
    };
    Bound bind(ad::Tape& tape, bool trainable) const;

    /// Flat gradient, same layout as params(), of a scalar on `tape`.
    std::vector<double> gradient(const ad::Tape& tape, const Bound& bound, ad::Var loss) const;

    /// Weight and bias vars in parameter order, for a joint Tape::grad call.
    static std::vector<ad::Var> parameter_vars(const Bound& bound);
    /// Adds gradients ordered like parameter_vars() into a flat vector.
    void accumulate(std::span<const Tensor> grads, std::span<double> flat) const;

    ad::Var forward(ad::Tape& tape, const Bound& bound, ad::Var input) const;

    /// Tape-free evaluation of a batch (rows x input_width).
    Tensor evaluate(const Tensor& input) const;

private:
    void layout();

    std::vector<std::size_t> widths_;
    Buffer params_;
    std::vector<std::size_t> offsets_;
};

}  // namespace physgrid
