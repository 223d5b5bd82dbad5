#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "physgrid/errors.hpp"
#include "physgrid/field_net.hpp"
#include "physgrid/grid_field.hpp"

namespace physgrid {

enum class StencilKind { Forward, Backward, Central };

struct Stencil {
    StencilKind kind = StencilKind::Central;
    Axis axis = Axis::X;
    int order = 1;
};

const char* stencil_name(StencilKind kind);
StencilKind parse_stencil(const std::string& name);

struct FdResult {
    /// Same grid as the input, one variable.
    GridField field;
    /// 1 where the requested stencil did not fit and a one-sided first-order
    /// fallback was used; layout (t, y, x).
    std::vector<std::uint8_t> boundary;
};

FdResult fd_derivative(const GridField& field, Stencil stencil, std::size_t var);

/// Time derivative of r predicted frames given the last history frame:
/// central where both neighbours exist, the history frame as left neighbour
/// of the first prediction, backward at the final frame. Works on any frame
/// type through `ops.sub(a, b)` and `ops.scale(a, c)`.
template <class Frame, class Ops>
std::vector<Frame> time_derivative_frames(const Frame& last_history, const std::vector<Frame>& predicted, double dt,
                                          Ops& ops) {
    if (predicted.empty()) throw UsageError("time derivative: no predicted frames (r = 0)");
    if (!(dt > 0)) throw UsageError("time derivative: dt must be positive");
    const std::size_t r = predicted.size();
    std::vector<Frame> out;
    out.reserve(r);
    for (std::size_t j = 0; j < r; ++j) {
        const Frame& left = j == 0 ? last_history : predicted[j - 1];
        if (j + 1 < r) {
            out.push_back(ops.scale(ops.sub(predicted[j + 1], left), 1.0 / (2.0 * dt)));
        } else {
            out.push_back(ops.scale(ops.sub(predicted[j], left), 1.0 / dt));
        }
    }
    return out;
}

/// GridField front end: `history` holds s+1 frames, `predicted` r frames on
/// the same grid. Returns r frames of du/dt for every variable.
GridField fd_time_of_prediction(const GridField& history, const GridField& predicted);

}  // namespace physgrid
