#include "physgrid/grid_field.hpp"

#include <array>
#include <cmath>
#include <set>

#include "physgrid/errors.hpp"

namespace physgrid {

GridField::GridField(std::size_t nt, std::size_t ny, std::size_t nx, std::vector<std::string> names, GridAxes axes)
    : nt_(nt), ny_(ny), nx_(nx), names_(std::move(names)), axes_(std::move(axes)) {
    data_.assign(nt_ * ny_ * nx_ * names_.size(), 0.0);
    validate();
}

GridField::GridField(std::size_t nt, std::size_t ny, std::size_t nx, std::vector<std::string> names, GridAxes axes,
                     std::vector<double> data)
    : nt_(nt), ny_(ny), nx_(nx), names_(std::move(names)), axes_(std::move(axes)), data_(std::move(data)) {
    validate();
}

void GridField::validate() const {
    if (nt_ == 0 || ny_ == 0 || nx_ == 0 || names_.empty()) {
        throw DataError("grid field: every dimension must be at least 1");
    }
    if (!(axes_.dx > 0.0 && axes_.dy > 0.0 && axes_.dt > 0.0)) {
        throw DataError("grid field: grid spacings must be positive");
    }
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw DataError("grid field: empty variable name");
        if (!seen.insert(n).second) throw DataError("grid field: duplicate variable name '" + n + "'");
    }
    if (data_.size() != nt_ * ny_ * nx_ * names_.size()) {
        throw DataError("grid field: data length " + std::to_string(data_.size()) + " does not match dims " +
                        std::to_string(nt_) + "x" + std::to_string(ny_) + "x" + std::to_string(nx_) + "x" +
                        std::to_string(names_.size()));
    }
}

std::size_t GridField::var_index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw DataError("grid field: no variable named '" + name + "'");
}

GridField GridField::frames(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > nt_) {
        throw UsageError("grid field: frame range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") is invalid for " + std::to_string(nt_) + " frames");
    }
    GridAxes a = axes_;
    a.t0 = t(begin);
    const std::size_t frame = ny_ * nx_ * names_.size();
    std::vector<double> d(data_.begin() + static_cast<std::ptrdiff_t>(begin * frame),
                          data_.begin() + static_cast<std::ptrdiff_t>(end * frame));
    return GridField(end - begin, ny_, nx_, names_, a, std::move(d));
}

bool GridField::same_layout(const GridField& other) const {
    return nt_ == other.nt_ && ny_ == other.ny_ && nx_ == other.nx_ && names_ == other.names_;
}

std::vector<Coord> grid_coords(std::size_t nt, std::size_t ny, std::size_t nx, const GridAxes& axes) {
    std::vector<Coord> out;
    out.reserve(nt * ny * nx);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t y = 0; y < ny; ++y) {
            for (std::size_t x = 0; x < nx; ++x) {
                out.push_back(Coord{axes.x0 + static_cast<double>(x) * axes.dx,
                                    axes.y0 + static_cast<double>(y) * axes.dy,
                                    axes.t0 + static_cast<double>(t) * axes.dt});
            }
        }
    }
    return out;
}

std::vector<Coord> grid_coords(const GridField& field) {
    return grid_coords(field.nt(), field.ny(), field.nx(), field.axes());
}

GridAxes refine_axes(const GridAxes& axes, std::size_t factor) {
    GridAxes a = axes;
    a.dx = axes.dx / static_cast<double>(factor);
    a.dy = axes.dy / static_cast<double>(factor);
    return a;
}

std::size_t refined_extent(std::size_t n, std::size_t factor) { return factor * (n - 1) + 1; }

ChronologicalSplit chronological_split(const GridField& field) {
    const std::size_t T = field.nt();
    if (T < 10) {
        throw DataError("chronological split: need at least 10 frames for an 8:1:1 split, got " + std::to_string(T));
    }
    ChronologicalSplit s;
    s.train_end = (8 * T) / 10;
    s.validation_end = (9 * T) / 10;
    s.train = field.frames(0, s.train_end);
    s.validation = field.frames(s.train_end, s.validation_end);
    s.test = field.frames(s.validation_end, T);
    return s;
}

namespace {

double keys_weight(double s) {
    constexpr double a = -0.5;
    s = std::abs(s);
    if (s <= 1.0) return (a + 2.0) * s * s * s - (a + 3.0) * s * s + 1.0;
    if (s < 2.0) return a * s * s * s - 5.0 * a * s * s + 8.0 * a * s - 4.0 * a;
    return 0.0;
}

/// Per fine index: base coarse index and the four Keys weights.
struct Taps {
    std::vector<std::ptrdiff_t> base;
    std::vector<std::array<double, 4>> w;
};

Taps make_taps(std::size_t n, std::size_t factor) {
    Taps taps;
    const std::size_t fine = refined_extent(n, factor);
    for (std::size_t i = 0; i < fine; ++i) {
        const std::size_t k = std::min(i / factor, n - 1);
        const double frac = static_cast<double>(i - k * factor) / static_cast<double>(factor);
        taps.base.push_back(static_cast<std::ptrdiff_t>(k));
        taps.w.push_back({keys_weight(1.0 + frac), keys_weight(frac), keys_weight(1.0 - frac),
                          keys_weight(2.0 - frac)});
    }
    return taps;
}

/// Sample with linear ghost extension beyond either end.
double sample(const std::vector<double>& f, std::ptrdiff_t i) {
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    if (i < 0) return f[0] + static_cast<double>(i) * (f[1] - f[0]);
    if (i >= n) return f[n - 1] + static_cast<double>(i - n + 1) * (f[n - 1] - f[n - 2]);
    return f[static_cast<std::size_t>(i)];
}

std::vector<double> interpolate_line(const std::vector<double>& f, const Taps& taps) {
    std::vector<double> out(taps.base.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::ptrdiff_t k = taps.base[i];
        const auto& w = taps.w[i];
        out[i] = w[0] * sample(f, k - 1) + w[1] * sample(f, k) + w[2] * sample(f, k + 1) + w[3] * sample(f, k + 2);
    }
    return out;
}

}  // namespace

GridField bicubic_upsample(const GridField& coarse, std::size_t factor) {
    if (factor != 2 && factor != 4) throw UsageError("bicubic: factor must be 2 or 4");
    if (coarse.nx() < 4 || coarse.ny() < 4) {
        throw DataError("bicubic: need at least 4 points along x and y for the cubic kernel");
    }
    const std::size_t fx = refined_extent(coarse.nx(), factor), fy = refined_extent(coarse.ny(), factor);
    GridField fine(coarse.nt(), fy, fx, coarse.names(), refine_axes(coarse.axes(), factor));
    const Taps tx = make_taps(coarse.nx(), factor), ty = make_taps(coarse.ny(), factor);
    std::vector<double> line;
    for (std::size_t t = 0; t < coarse.nt(); ++t) {
        for (std::size_t v = 0; v < coarse.nvars(); ++v) {
            // x pass on coarse rows, then y pass on fine columns.
            std::vector<std::vector<double>> rows(coarse.ny());
            for (std::size_t y = 0; y < coarse.ny(); ++y) {
                line.resize(coarse.nx());
                for (std::size_t x = 0; x < coarse.nx(); ++x) line[x] = coarse.at(t, y, x, v);
                rows[y] = interpolate_line(line, tx);
            }
            for (std::size_t x = 0; x < fx; ++x) {
                line.resize(coarse.ny());
                for (std::size_t y = 0; y < coarse.ny(); ++y) line[y] = rows[y][x];
                const std::vector<double> col = interpolate_line(line, ty);
                for (std::size_t y = 0; y < fy; ++y) fine.at(t, y, x, v) = col[y];
            }
        }
    }
    return fine;
}

GridField restrict_to_coarse(const GridField& fine, std::size_t factor) {
    if (factor == 0 || (fine.nx() - 1) % factor != 0 || (fine.ny() - 1) % factor != 0) {
        throw UsageError("restrict: grid is not a refinement by this factor");
    }
    const std::size_t nx = (fine.nx() - 1) / factor + 1, ny = (fine.ny() - 1) / factor + 1;
    GridAxes a = fine.axes();
    a.dx *= static_cast<double>(factor);
    a.dy *= static_cast<double>(factor);
    GridField out(fine.nt(), ny, nx, fine.names(), a);
    for (std::size_t t = 0; t < fine.nt(); ++t)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x)
                for (std::size_t v = 0; v < fine.nvars(); ++v)
                    out.at(t, y, x, v) = fine.at(t, y * factor, x * factor, v);
    return out;
}

}  // namespace physgrid
