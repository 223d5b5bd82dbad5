#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "physgrid/grid_field.hpp"
#include "physgrid/pde_library.hpp"

namespace physgrid {

enum class CaseId { Advection2D, AdvectionDiffusion2D, Wave2D };

const char* case_name(CaseId id);
/// Accepts "advection2d", "advection-diffusion2d", "wave2d" (any case).
CaseId parse_case(const std::string& name);

/// Gaussian-like periodic bump exp(kappa (cos(x - x0 - vx t) + cos(y - y0 - vy t) - 2))
/// scaled by amplitude; drifts with constant velocity.
struct ForcingBump {
    double amplitude = 1.0;
    double kappa = 4.0;
    double x0 = 0.0;
    double y0 = 0.0;
    double vx = 0.0;
    double vy = 0.0;
};

/// One Fourier mode of Re(sum c_k exp(i (kx x + ky y))).
struct Mode {
    int kx = 0;
    int ky = 0;
    std::complex<double> value;
    /// Initial time derivative; used by the wave equation only.
    std::complex<double> rate;
};

/// Problem definition on the periodic square [0, 2 pi)^2.
///
/// First-order cases solve u_t = -a u_x - b u_y + nu_x u_xx + nu_y u_yy + H,
/// the wave case u_tt = cx2 u_xx + cy2 u_yy + H.
struct SyntheticCase {
    CaseId id = CaseId::Advection2D;
    double a = 0.5;
    double b = 0.0;
    double nu_x = 0.0;
    double nu_y = 0.0;
    double cx2 = 1.0;
    double cy2 = 1.0;
    std::vector<ForcingBump> forcing;

    std::size_t nx = 32;
    std::size_t ny = 32;
    std::size_t nt = 100;
    double dt = 0.05;
    std::uint64_t seed = 0;

    /// Random initial condition: modes with |k|^2 <= max_wavenumber^2 and
    /// amplitudes decaying like 1/(1 + |k|^2).
    int max_wavenumber = 3;
    /// Explicit initial modes replace the random draw when set.
    std::optional<std::vector<Mode>> initial_modes;
    /// Additive Gaussian noise on the coarse field, as a fraction of its RMS.
    double noise = 0.0;
    std::string variable = "u";

    void validate() const;
    /// Case with the default coefficients of `id`.
    static SyntheticCase defaults(CaseId id);
    nlohmann::json to_json() const;
};

/// Closed-form modal solution of a SyntheticCase.
class SpectralSolution {
public:
    explicit SpectralSolution(const SyntheticCase& c);

    const SyntheticCase& problem() const { return case_; }
    /// Initial coefficients of every mode the solution carries.
    const std::vector<Mode>& initial_modes() const { return modes_; }

    /// d^order c_k / dt^order at time t (order <= 4).
    std::complex<double> coefficient(std::size_t mode, double t, int order = 0) const;

    /// d^(px + py + pt) u / dx^px dy^py dt^pt at a point.
    double derivative(double x, double y, double t, int px = 0, int py = 0, int pt = 0) const;
    double value(double x, double y, double t) const { return derivative(x, y, t); }

    /// sum_k |c_k^(pt)(t)| |kx|^px |ky|^py: bounds |d u| over all (x, y) at time t.
    double sup_bound(double t, int px, int py, int pt) const;

    /// The solution sampled on a regular grid.
    GridField sample(std::size_t nt, std::size_t ny, std::size_t nx, const GridAxes& axes) const;

    /// Forcing H at a point.
    double forcing(double x, double y, double t) const;
    GridField sample_forcing(std::size_t nt, std::size_t ny, std::size_t nx, const GridAxes& axes) const;

private:
    std::complex<double> forcing_derivative(std::size_t mode, double t, int order) const;

    SyntheticCase case_;
    std::vector<Mode> modes_;
    // Forcing coefficients per mode: H_k(t) = sum_j F_j exp(-i omega_j t).
    std::vector<std::vector<std::pair<std::complex<double>, double>>> forcing_;
};

/// Unforced advection by characteristics: u(x, y, t) = g(x - a t, y - b t).
/// With forcing, the Duhamel integral along each characteristic is evaluated
/// by Gauss-Legendre quadrature. Used as an independent cross-check of the
/// modal route.
double characteristic_solution(const SyntheticCase& c, const std::vector<Mode>& initial, double x, double y, double t,
                               int quadrature_nodes = 48);

/// Unforced advection sampled on a grid via the feet of the characteristics.
GridField sample_characteristics(const SyntheticCase& c, const std::vector<Mode>& initial, std::size_t nt,
                                 std::size_t ny, std::size_t nx, const GridAxes& axes);

struct SelfCheck {
    double residual_rms = 0.0;
    double residual_max = 0.0;
    /// Pointwise truncation bound of the central stencils.
    double bound = 0.0;
    bool passed = false;
};

/// Central-difference residual of a field against its own PDE at interior
/// points, with the truncation bound from the solution's modal derivatives.
SelfCheck residual_self_check(const SpectralSolution& solution, const GridField& field);

struct GeneratedCase {
    GridField coarse;
    GridField fine2x;
    GridField fine4x;
    /// Forcing sampled on the coarse grid.
    GridField forcing;
    EquationSystem truth;
    SelfCheck check;
    nlohmann::json manifest;
};

/// Grid axes of the coarse grid: x, y in [0, 2 pi) with nx, ny points, t from 0.
GridAxes synthetic_axes(const SyntheticCase& c);

/// Generates coarse, 2x and 4x fields from one solution. Throws NumericalError
/// when the self-check residual exceeds its bound.
GeneratedCase generate(const SyntheticCase& c);

}  // namespace physgrid
