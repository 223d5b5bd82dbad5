#include "physgrid/finite_difference.hpp"

#include <algorithm>

namespace physgrid {

const char* stencil_name(StencilKind kind) {
    switch (kind) {
        case StencilKind::Forward: return "forward";
        case StencilKind::Backward: return "backward";
        case StencilKind::Central: return "central";
    }
    return "?";
}

StencilKind parse_stencil(const std::string& name) {
    if (name == "forward") return StencilKind::Forward;
    if (name == "backward") return StencilKind::Backward;
    if (name == "central") return StencilKind::Central;
    throw UsageError("unknown stencil '" + name + "' (expected forward, backward or central)");
}

namespace {

const char* axis_label(Axis a) { return a == Axis::X ? "x" : a == Axis::Y ? "y" : "t"; }

}  // namespace

FdResult fd_derivative(const GridField& field, Stencil stencil, std::size_t var) {
    field.validate();
    if (var >= field.nvars()) throw UsageError("fd: variable index out of range");
    if (stencil.order != 1 && stencil.order != 2) throw UsageError("fd: derivative order must be 1 or 2");

    std::size_t n = 0;
    double h = 0.0;
    switch (stencil.axis) {
        case Axis::X: n = field.nx(), h = field.axes().dx; break;
        case Axis::Y: n = field.ny(), h = field.axes().dy; break;
        case Axis::T: n = field.nt(), h = field.axes().dt; break;
    }
    const std::size_t need = (stencil.kind == StencilKind::Central || stencil.order == 2) ? 3 : 2;
    if (n < need) {
        throw DataError(std::string("fd: ") + stencil_name(stencil.kind) + " stencil of order " +
                        std::to_string(stencil.order) + " needs " + std::to_string(need) + " samples along " +
                        axis_label(stencil.axis) + ", got " + std::to_string(n));
    }

    const std::string& name = field.names()[var];
    const std::string label = stencil.order == 1 ? "d" + name + "/d" + axis_label(stencil.axis)
                                                 : "d2" + name + "/d" + axis_label(stencil.axis) + "2";
    FdResult out{GridField(field.nt(), field.ny(), field.nx(), {label}, field.axes()),
                 std::vector<std::uint8_t>(field.points(), 0)};

    const double inv = 1.0 / h;
    const double inv2 = 1.0 / (h * h);
    for (std::size_t t = 0; t < field.nt(); ++t) {
        for (std::size_t y = 0; y < field.ny(); ++y) {
            for (std::size_t x = 0; x < field.nx(); ++x) {
                std::size_t i = 0;
                switch (stencil.axis) {
                    case Axis::X: i = x; break;
                    case Axis::Y: i = y; break;
                    case Axis::T: i = t; break;
                }
                auto u = [&](std::size_t k) {
                    switch (stencil.axis) {
                        case Axis::X: return field.at(t, y, k, var);
                        case Axis::Y: return field.at(t, k, x, var);
                        case Axis::T: return field.at(k, y, x, var);
                    }
                    return 0.0;
                };
                const bool has_left = i > 0, has_right = i + 1 < n;
                double d = 0.0;
                bool fallback = false;
                if (stencil.order == 1) {
                    StencilKind kind = stencil.kind;
                    if (kind == StencilKind::Central && !(has_left && has_right)) {
                        kind = has_right ? StencilKind::Forward : StencilKind::Backward;
                        fallback = true;
                    } else if (kind == StencilKind::Forward && !has_right) {
                        kind = StencilKind::Backward;
                        fallback = true;
                    } else if (kind == StencilKind::Backward && !has_left) {
                        kind = StencilKind::Forward;
                        fallback = true;
                    }
                    switch (kind) {
                        case StencilKind::Forward: d = (u(i + 1) - u(i)) * inv; break;
                        case StencilKind::Backward: d = (u(i) - u(i - 1)) * inv; break;
                        case StencilKind::Central: d = (u(i + 1) - u(i - 1)) * (0.5 * inv); break;
                    }
                } else {
                    // Three-point second difference centred where it fits.
                    long c = static_cast<long>(i);
                    if (stencil.kind == StencilKind::Forward) c += 1;
                    if (stencil.kind == StencilKind::Backward) c -= 1;
                    const long lo = 1, hi = static_cast<long>(n) - 2;
                    if (c < lo || c > hi) {
                        c = std::clamp(c, lo, hi);
                        fallback = true;
                    }
                    const auto k = static_cast<std::size_t>(c);
                    d = (u(k + 1) - 2.0 * u(k) + u(k - 1)) * inv2;
                }
                out.field.at(t, y, x, 0) = d;
                out.boundary[(t * field.ny() + y) * field.nx() + x] = fallback ? 1 : 0;
            }
        }
    }
    return out;
}

namespace {

struct VectorOps {
    std::vector<double> sub(const std::vector<double>& a, const std::vector<double>& b) const {
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
        return out;
    }
    std::vector<double> scale(std::vector<double> a, double c) const {
        for (double& v : a) v *= c;
        return a;
    }
};

std::vector<double> frame_values(const GridField& f, std::size_t t) {
    const std::size_t n = f.cells() * f.nvars();
    const auto begin = f.data().begin() + static_cast<std::ptrdiff_t>(t * n);
    return std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(n));
}

}  // namespace

GridField fd_time_of_prediction(const GridField& history, const GridField& predicted) {
    if (predicted.nt() == 0) throw UsageError("time derivative: no predicted frames (r = 0)");
    if (history.nt() == 0) throw UsageError("time derivative: history is empty");
    if (history.ny() != predicted.ny() || history.nx() != predicted.nx() || history.names() != predicted.names()) {
        throw ShapeError("time derivative: history and predictions are on different grids");
    }
    const double dt = predicted.axes().dt;
    std::vector<std::vector<double>> frames;
    for (std::size_t t = 0; t < predicted.nt(); ++t) frames.push_back(frame_values(predicted, t));
    VectorOps ops;
    const auto d = time_derivative_frames(frame_values(history, history.nt() - 1), frames, dt, ops);
    GridField out(predicted.nt(), predicted.ny(), predicted.nx(), predicted.names(), predicted.axes());
    for (std::size_t t = 0; t < d.size(); ++t) {
        std::copy(d[t].begin(), d[t].end(), out.data().begin() + static_cast<std::ptrdiff_t>(t * d[t].size()));
    }
    return out;
}

}  // namespace physgrid
