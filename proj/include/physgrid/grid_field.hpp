#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "physgrid/field_net.hpp"

namespace physgrid {

/// Regular-grid coordinate metadata. Sample (t, y, x) sits at
/// (x0 + x*dx, y0 + y*dy, t0 + t*dt).
struct GridAxes {
    double x0 = 0.0;
    double dx = 1.0;
    double y0 = 0.0;
    double dy = 1.0;
    double t0 = 0.0;
    double dt = 1.0;
    std::string space_units;
    std::string time_units;

    bool operator==(const GridAxes&) const = default;
};

/// Dense spatiotemporal field, layout [t][y][x][var].
class GridField {
public:
    GridField() = default;
    GridField(std::size_t nt, std::size_t ny, std::size_t nx, std::vector<std::string> names, GridAxes axes);
    GridField(std::size_t nt, std::size_t ny, std::size_t nx, std::vector<std::string> names, GridAxes axes,
              std::vector<double> data);

    std::size_t nt() const { return nt_; }
    std::size_t ny() const { return ny_; }
    std::size_t nx() const { return nx_; }
    std::size_t nvars() const { return names_.size(); }
    std::size_t cells() const { return ny_ * nx_; }
    std::size_t points() const { return nt_ * ny_ * nx_; }
    const std::vector<std::string>& names() const { return names_; }
    const GridAxes& axes() const { return axes_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::size_t index(std::size_t t, std::size_t y, std::size_t x, std::size_t v) const {
        return ((t * ny_ + y) * nx_ + x) * names_.size() + v;
    }
    double& at(std::size_t t, std::size_t y, std::size_t x, std::size_t v) { return data_[index(t, y, x, v)]; }
    double at(std::size_t t, std::size_t y, std::size_t x, std::size_t v) const { return data_[index(t, y, x, v)]; }

    double x(std::size_t i) const { return axes_.x0 + static_cast<double>(i) * axes_.dx; }
    double y(std::size_t j) const { return axes_.y0 + static_cast<double>(j) * axes_.dy; }
    double t(std::size_t k) const { return axes_.t0 + static_cast<double>(k) * axes_.dt; }
    Coord coord(std::size_t t, std::size_t y, std::size_t x) const { return Coord{this->x(x), this->y(y), this->t(t)}; }

    /// Coordinate box corners.
    Coord lo() const { return Coord{axes_.x0, axes_.y0, axes_.t0}; }
    Coord hi() const { return coord(nt_ - 1, ny_ - 1, nx_ - 1); }

    /// Index of a variable by name, or throws DataError.
    std::size_t var_index(const std::string& name) const;

    /// Copy of frames [begin, end) with t0 shifted accordingly.
    GridField frames(std::size_t begin, std::size_t end) const;

    bool same_layout(const GridField& other) const;
    void validate() const;

private:
    std::size_t nt_ = 0;
    std::size_t ny_ = 0;
    std::size_t nx_ = 0;
    std::vector<std::string> names_;
    GridAxes axes_;
    std::vector<double> data_;
};

/// Every grid coordinate in layout order (t, y, x).
std::vector<Coord> grid_coords(const GridField& field);
std::vector<Coord> grid_coords(std::size_t nt, std::size_t ny, std::size_t nx, const GridAxes& axes);

/// Axes of the endpoint-preserving refinement: spacing / factor, so an
/// n-point axis becomes factor*(n-1)+1 points.
GridAxes refine_axes(const GridAxes& axes, std::size_t factor);
std::size_t refined_extent(std::size_t n, std::size_t factor);

struct ChronologicalSplit {
    GridField train;
    GridField validation;
    GridField test;
    std::size_t train_end = 0;  ///< floor(0.8 T)
    std::size_t validation_end = 0;  ///< floor(0.9 T)
};

/// 8:1:1 split in time order; requires T >= 10.
ChronologicalSplit chronological_split(const GridField& field);

/// Per-frame, per-variable bicubic (Keys, a = -1/2) interpolation onto the
/// refined grid. factor must be 2 or 4 and each spatial axis needs >= 4 points.
GridField bicubic_upsample(const GridField& coarse, std::size_t factor);

/// Keeps every factor-th sample along x and y.
GridField restrict_to_coarse(const GridField& fine, std::size_t factor);

}  // namespace physgrid
