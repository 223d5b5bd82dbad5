#include "physgrid/field_net.hpp"

#include <algorithm>
#include <cmath>

#include "physgrid/errors.hpp"

namespace physgrid {

namespace {

constexpr std::size_t kShardRows = 512;

std::size_t idx(Partial p) { return static_cast<std::size_t>(p); }

/// Axis pair of a second partial.
struct SecondOrder {
    Partial partial;
    int i;
    int j;
};

constexpr std::array<SecondOrder, 4> kSecondOrders{{
    {Partial::XX, 0, 0},
    {Partial::YY, 1, 1},
    {Partial::TT, 2, 2},
    {Partial::XY, 0, 1},
}};

constexpr std::array<Partial, 3> kFirstOrders{Partial::X, Partial::Y, Partial::T};

Partial first_partial(int axis) { return kFirstOrders[static_cast<std::size_t>(axis)]; }

void check_axis(int axis) {
    if (axis < 0 || axis > 2) {
        throw UsageError("axis " + std::to_string(axis) + " out of range {x=0, y=1, t=2}");
    }
}

}  // namespace

const char* partial_name(Partial p) {
    switch (p) {
        case Partial::Value: return "u";
        case Partial::T: return "u_t";
        case Partial::X: return "u_x";
        case Partial::Y: return "u_y";
        case Partial::TT: return "u_tt";
        case Partial::XX: return "u_xx";
        case Partial::YY: return "u_yy";
        case Partial::XY: return "u_xy";
    }
    return "?";
}

const char* role_name(NetRole role) {
    switch (role) {
        case NetRole::Surrogate: return "surrogate";
        case NetRole::LatentForce: return "latent_force";
        case NetRole::Forecast: return "forecast";
    }
    return "?";
}

NormalizationSpec NormalizationSpec::identity(std::size_t outputs) {
    NormalizationSpec n;
    n.outputs.assign(outputs, Affine{});
    return n;
}

NormalizationSpec NormalizationSpec::from_box(const Coord& lo, const Coord& hi, std::vector<Affine> outputs) {
    NormalizationSpec n;
    const std::array<double, 3> l{lo.x, lo.y, lo.t}, h{hi.x, hi.y, hi.t};
    for (std::size_t a = 0; a < 3; ++a) {
        const double half = 0.5 * (h[a] - l[a]);
        n.axes[a] = Affine{0.5 * (h[a] + l[a]), half > 0.0 ? half : 1.0};
    }
    n.outputs = std::move(outputs);
    n.validate();
    return n;
}

Coord NormalizationSpec::normalize(const Coord& c) const {
    return Coord{axes[0].forward(c.x), axes[1].forward(c.y), axes[2].forward(c.t)};
}

Coord NormalizationSpec::denormalize(const Coord& c) const {
    return Coord{axes[0].inverse(c.x), axes[1].inverse(c.y), axes[2].inverse(c.t)};
}

bool NormalizationSpec::inside(const Coord& physical) const {
    constexpr double tol = 1e-9;
    const Coord n = normalize(physical);
    return std::abs(n.x) <= 1.0 + tol && std::abs(n.y) <= 1.0 + tol && std::abs(n.t) <= 1.0 + tol;
}

void NormalizationSpec::validate() const {
    for (const Affine& a : axes) {
        if (!(std::isfinite(a.scale) && a.scale != 0.0 && std::isfinite(a.offset))) {
            throw UsageError("normalization: coordinate scale must be finite and nonzero");
        }
    }
    for (const Affine& a : outputs) {
        if (!(std::isfinite(a.scale) && a.scale != 0.0 && std::isfinite(a.offset))) {
            throw UsageError("normalization: output std must be finite and nonzero");
        }
    }
}

FieldNet::FieldNet(Mlp mlp, NetRole role, NormalizationSpec norm)
    : mlp_(std::move(mlp)), role_(role), norm_(std::move(norm)) {
    if (mlp_.input_width() != 3) {
        throw UsageError("field net: input width must be 3 (x, y, t), got " + std::to_string(mlp_.input_width()));
    }
    if (norm_.outputs.size() != mlp_.output_width()) {
        throw UsageError("field net: normalization covers " + std::to_string(norm_.outputs.size()) +
                         " outputs, network has " + std::to_string(mlp_.output_width()));
    }
    norm_.validate();
}

FieldNet FieldNet::init(std::vector<std::size_t> widths, std::uint64_t seed, NetRole role,
                        std::optional<NormalizationSpec> norm) {
    if (widths.empty() || widths.front() != 3) throw UsageError("field net: widths must start with input width 3");
    Mlp mlp = Mlp::xavier(std::move(widths), seed);
    if (role == NetRole::LatentForce) {
        const std::size_t last = mlp.layers() - 1;
        const std::size_t n = mlp.widths()[last] * mlp.widths()[last + 1];
        std::fill_n(mlp.params().begin() + static_cast<std::ptrdiff_t>(mlp.weight_offset(last)), n, 0.0);
    }
    const std::size_t outputs = mlp.output_width();
    return FieldNet(std::move(mlp), role, norm ? std::move(*norm) : NormalizationSpec::identity(outputs));
}

std::vector<std::size_t> FieldNet::architecture(std::size_t hidden_layers, std::size_t hidden_width,
                                                std::size_t outputs) {
    std::vector<std::size_t> w{3};
    for (std::size_t i = 0; i < hidden_layers; ++i) w.push_back(hidden_width);
    w.push_back(outputs);
    return w;
}

void FieldNet::set_normalization(NormalizationSpec norm) {
    if (norm.outputs.size() != outputs()) throw UsageError("field net: normalization output count mismatch");
    norm.validate();
    norm_ = std::move(norm);
}

Tensor coords_tensor(const NormalizationSpec& norm, std::span<const Coord> coords) {
    Tensor t = Tensor::matrix(coords.size(), 3);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const Coord n = norm.normalize(coords[i]);
        t(i, 0) = n.x;
        t(i, 1) = n.y;
        t(i, 2) = n.t;
    }
    return t;
}

Tensor predict(const FieldNet& net, std::span<const Coord> coords, std::vector<std::uint8_t>* extrapolated) {
    const NormalizationSpec& norm = net.normalization();
    Tensor out = net.mlp().evaluate(coords_tensor(norm, coords));
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t k = 0; k < out.cols(); ++k) out(r, k) = norm.outputs[k].inverse(out(r, k));
    }
    if (extrapolated) {
        extrapolated->resize(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i) (*extrapolated)[i] = norm.inside(coords[i]) ? 0 : 1;
    }
    return out;
}

JetRequest& JetRequest::add(Partial p) {
    want[idx(p)] = true;
    return *this;
}

ad::Var NetJet::at(Partial p) const {
    const auto& v = partial[idx(p)];
    if (!v) throw UsageError(std::string("jet: partial ") + partial_name(p) + " was not requested");
    return *v;
}

NetJet forward_jet(ad::Tape& tape, const Mlp& mlp, const Mlp::Bound& bound, ad::Var input, const JetRequest& request) {
    if (mlp.input_width() != 3) throw UsageError("jet: network input width must be 3");
    std::array<bool, 3> need_first{};
    std::vector<SecondOrder> pairs;
    for (int a = 0; a < 3; ++a) need_first[static_cast<std::size_t>(a)] = request.has(first_partial(a));
    for (const SecondOrder& s : kSecondOrders) {
        if (!request.has(s.partial)) continue;
        pairs.push_back(s);
        need_first[static_cast<std::size_t>(s.i)] = true;
        need_first[static_cast<std::size_t>(s.j)] = true;
    }

    const std::size_t rows = tape.value(input).rows();
    ad::Var h = input;
    std::array<std::optional<ad::Var>, 3> h1;
    std::vector<std::optional<ad::Var>> h2(pairs.size());

    for (std::size_t l = 0; l < mlp.layers(); ++l) {
        const ad::Var w = bound.weights[l];
        ad::Var a = tape.add_row(tape.matmul(h, w), bound.biases[l]);
        std::array<std::optional<ad::Var>, 3> a1;
        std::vector<std::optional<ad::Var>> a2(pairs.size());
        if (l == 0) {
            // d(input)/d(axis) is a unit vector, so the tangent is a row of W.
            for (std::size_t i = 0; i < 3; ++i) {
                if (need_first[i]) a1[i] = tape.broadcast_rows(tape.row(w, i), rows);
            }
        } else {
            for (std::size_t i = 0; i < 3; ++i) {
                if (h1[i]) a1[i] = tape.matmul(*h1[i], w);
            }
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                if (h2[p]) a2[p] = tape.matmul(*h2[p], w);
            }
        }
        if (l + 1 == mlp.layers()) {
            h = a;
            h1 = a1;
            h2 = a2;
            break;
        }
        // tanh' = 1 - tanh^2, tanh'' = -2 tanh (1 - tanh^2)
        h = tape.tanh(a);
        const ad::Var s = tape.add_scalar(tape.scale(tape.square(h), -1.0), 1.0);
        std::optional<ad::Var> hs;
        if (!pairs.empty()) hs = tape.mul(h, s);
        for (std::size_t i = 0; i < 3; ++i) {
            h1[i].reset();
            if (a1[i]) h1[i] = tape.mul(s, *a1[i]);
        }
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto i = static_cast<std::size_t>(pairs[p].i), j = static_cast<std::size_t>(pairs[p].j);
            const ad::Var cross = i == j ? tape.square(*a1[i]) : tape.mul(*a1[i], *a1[j]);
            const ad::Var curvature = tape.scale(tape.mul(*hs, cross), -2.0);
            h2[p] = a2[p] ? tape.add(tape.mul(s, *a2[p]), curvature) : curvature;
        }
    }

    NetJet jet;
    jet.partial[idx(Partial::Value)] = h;
    for (int a = 0; a < 3; ++a) {
        if (request.has(first_partial(a))) jet.partial[idx(first_partial(a))] = h1[static_cast<std::size_t>(a)];
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (h2[p]) {
            jet.partial[idx(pairs[p].partial)] = h2[p];
        } else {
            // Affine network: curvature is identically zero.
            jet.partial[idx(pairs[p].partial)] =
                tape.constant(Tensor::matrix(rows, mlp.output_width(), 0.0));
        }
    }
    return jet;
}

double physical_factor(const NormalizationSpec& norm, std::size_t k, Partial p) {
    const double s = norm.outputs[k].scale;
    const double sx = norm.axes[0].scale, sy = norm.axes[1].scale, st = norm.axes[2].scale;
    switch (p) {
        case Partial::Value: return s;
        case Partial::T: return s / st;
        case Partial::X: return s / sx;
        case Partial::Y: return s / sy;
        case Partial::TT: return s / (st * st);
        case Partial::XX: return s / (sx * sx);
        case Partial::YY: return s / (sy * sy);
        case Partial::XY: return s / (sx * sy);
    }
    return s;
}

const Tensor& DerivativeBundle::at(Partial p) const {
    const auto& v = partial[idx(p)];
    if (!v) throw DataError(std::string("derivative bundle: missing partial ") + partial_name(p));
    return *v;
}

JetRequest default_bundle_request() {
    JetRequest r;
    r.add(Partial::Value).add(Partial::T).add(Partial::X).add(Partial::Y).add(Partial::XX).add(Partial::YY);
    return r;
}

DerivativeBundle derivative_bundle(const FieldNet& net, std::span<const Coord> coords, const JetRequest& request) {
    const NormalizationSpec& norm = net.normalization();
    const std::size_t outputs = net.outputs();
    DerivativeBundle bundle;
    bundle.points = coords.size();
    bundle.variables = outputs;
    JetRequest req = request;
    req.add(Partial::Value);
    for (std::size_t p = 0; p < kPartialCount; ++p) {
        if (req.want[p]) bundle.partial[p] = Tensor::matrix(coords.size(), outputs);
    }
    for (std::size_t begin = 0; begin < coords.size(); begin += kShardRows) {
        const std::size_t end = std::min(coords.size(), begin + kShardRows);
        ad::Tape tape;
        const Mlp::Bound bound = net.mlp().bind(tape, false);
        const ad::Var x = tape.constant(coords_tensor(norm, coords.subspan(begin, end - begin)));
        const NetJet jet = forward_jet(tape, net.mlp(), bound, x, req);
        for (std::size_t p = 0; p < kPartialCount; ++p) {
            if (!req.want[p]) continue;
            const Partial part = static_cast<Partial>(p);
            const Tensor& v = tape.value(jet.at(part));
            Tensor& dst = *bundle.partial[p];
            for (std::size_t r = begin; r < end; ++r) {
                for (std::size_t k = 0; k < outputs; ++k) {
                    const double raw = v(r - begin, k);
                    dst(r, k) = part == Partial::Value ? norm.outputs[k].inverse(raw)
                                                       : raw * physical_factor(norm, k, part);
                }
            }
        }
    }
    return bundle;
}

std::vector<double> second_partial(const FieldNet& net, const Coord& coord, int axis_i, int axis_j) {
    check_axis(axis_i);
    check_axis(axis_j);
    const NormalizationSpec& norm = net.normalization();
    ad::Tape tape;
    const Mlp::Bound bound = net.mlp().bind(tape, false);
    const Coord one[] = {coord};
    const ad::Var x = tape.leaf(coords_tensor(norm, one));
    JetRequest req;
    req.add(first_partial(axis_i));
    const NetJet jet = forward_jet(tape, net.mlp(), bound, x, req);
    const ad::Var first = jet.at(first_partial(axis_i));
    std::vector<double> out(net.outputs());
    const double axis_scale = norm.axes[static_cast<std::size_t>(axis_i)].scale *
                              norm.axes[static_cast<std::size_t>(axis_j)].scale;
    for (std::size_t k = 0; k < net.outputs(); ++k) {
        const ad::Var target = tape.sum(tape.col(first, k));
        const Tensor g = tape.grad(target, x);
        out[k] = g(0, static_cast<std::size_t>(axis_j)) * norm.outputs[k].scale / axis_scale;
    }
    return out;
}

Tensor input_gradient(const FieldNet& net, const Coord& coord) {
    const NormalizationSpec& norm = net.normalization();
    ad::Tape tape;
    const Mlp::Bound bound = net.mlp().bind(tape, false);
    const Coord one[] = {coord};
    const ad::Var x = tape.leaf(coords_tensor(norm, one));
    const ad::Var y = net.mlp().forward(tape, bound, x);
    Tensor out = Tensor::matrix(net.outputs(), 3);
    for (std::size_t k = 0; k < net.outputs(); ++k) {
        const Tensor g = tape.grad(tape.sum(tape.col(y, k)), x);
        for (std::size_t a = 0; a < 3; ++a) out(k, a) = g(0, a) * norm.outputs[k].scale / norm.axes[a].scale;
    }
    return out;
}

}  // namespace physgrid
