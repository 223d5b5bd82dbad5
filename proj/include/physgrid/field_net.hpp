#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physgrid/mlp.hpp"
#include "physgrid/tape.hpp"
#include "physgrid/tensor.hpp"

namespace physgrid {

/// A point in (x, y, t). Physical or normalized depending on context.
struct Coord {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
};

enum class Axis : int { X = 0, Y = 1, T = 2 };

/// Partial derivatives a derivative bundle can carry.
enum class Partial : std::uint8_t { Value, T, X, Y, TT, XX, YY, XY };
inline constexpr std::size_t kPartialCount = 8;

const char* partial_name(Partial p);

/// normalized = (physical - offset) / scale
struct Affine {
    double offset = 0.0;
    double scale = 1.0;

    double forward(double v) const { return (v - offset) / scale; }
    double inverse(double v) const { return v * scale + offset; }
};

/// Coordinate box -> [-1, 1]^3 and per-variable z-scores.
struct NormalizationSpec {
    std::array<Affine, 3> axes{};
    std::vector<Affine> outputs;

    static NormalizationSpec identity(std::size_t outputs);
    /// Maps [lo, hi] on each axis onto [-1, 1]; degenerate axes get scale 1.
    static NormalizationSpec from_box(const Coord& lo, const Coord& hi, std::vector<Affine> outputs);

    Coord normalize(const Coord& c) const;
    Coord denormalize(const Coord& c) const;
    /// True when the normalized coordinate lies inside [-1, 1]^3 (with a
    /// small tolerance for round-off).
    bool inside(const Coord& physical) const;
    void validate() const;
};

enum class NetRole : std::uint8_t { Surrogate = 0, LatentForce = 1, Forecast = 2 };

const char* role_name(NetRole role);

/// Coordinate network: (x, y, t) -> output channels in physical units.
class FieldNet {
public:
    FieldNet() = default;
    FieldNet(Mlp mlp, NetRole role, NormalizationSpec norm);

    /// widths must start with 3. Latent-force nets start with a zero output
    /// layer so the forcing is initially absent.
    static FieldNet init(std::vector<std::size_t> widths, std::uint64_t seed, NetRole role = NetRole::Surrogate,
                         std::optional<NormalizationSpec> norm = std::nullopt);

    /// 3 -> hidden x depth -> outputs
    static std::vector<std::size_t> architecture(std::size_t hidden_layers, std::size_t hidden_width,
                                                 std::size_t outputs);
    static std::size_t param_count(std::span<const std::size_t> widths) { return Mlp::param_count(widths); }

    const Mlp& mlp() const { return mlp_; }
    Mlp& mlp() { return mlp_; }
    NetRole role() const { return role_; }
    const NormalizationSpec& normalization() const { return norm_; }
    void set_normalization(NormalizationSpec norm);
    std::size_t outputs() const { return mlp_.output_width(); }
    std::size_t param_count() const { return mlp_.params().size(); }

private:
    Mlp mlp_;
    NetRole role_ = NetRole::Surrogate;
    NormalizationSpec norm_;
};

/// Normalized coordinates as a rows x 3 tensor.
Tensor coords_tensor(const NormalizationSpec& norm, std::span<const Coord> coords);

/// Physical-unit outputs, one row per coordinate. `extrapolated`, when given,
/// receives 1 for coordinates outside the normalization box.
Tensor predict(const FieldNet& net, std::span<const Coord> coords, std::vector<std::uint8_t>* extrapolated = nullptr);

/// Which partials a forward jet should carry.
struct JetRequest {
    std::array<bool, kPartialCount> want{};

    JetRequest& add(Partial p);
    bool has(Partial p) const { return want[static_cast<std::size_t>(p)]; }
};

/// Forward-mode Taylor propagation of a network on a tape, in normalized
/// units. Entries are rows x outputs; absent partials are empty optionals.
struct NetJet {
    std::array<std::optional<ad::Var>, kPartialCount> partial;

    ad::Var at(Partial p) const;
};

NetJet forward_jet(ad::Tape& tape, const Mlp& mlp, const Mlp::Bound& bound, ad::Var input, const JetRequest& request);

/// Factor that converts a normalized partial of output `k` to physical units.
double physical_factor(const NormalizationSpec& norm, std::size_t k, Partial p);

/// Physical-unit partials at a batch of coordinates, each rows x outputs.
struct DerivativeBundle {
    std::size_t points = 0;
    std::size_t variables = 0;
    std::array<std::optional<Tensor>, kPartialCount> partial;

    bool has(Partial p) const { return partial[static_cast<std::size_t>(p)].has_value(); }
    const Tensor& at(Partial p) const;
    double operator()(Partial p, std::size_t point, std::size_t var) const { return at(p)(point, var); }
};

/// Default request: value, t, x, y, xx, yy.
JetRequest default_bundle_request();

DerivativeBundle derivative_bundle(const FieldNet& net, std::span<const Coord> coords,
                                   const JetRequest& request = default_bundle_request());

/// d2(output)/d(axis_i)d(axis_j) per output channel in physical units, obtained
/// by reverse-mode differentiation of the taped first-derivative graph.
std::vector<double> second_partial(const FieldNet& net, const Coord& coord, int axis_i, int axis_j);

/// d(output_k)/d(x, y, t) by reverse mode; rows = outputs, cols = 3.
Tensor input_gradient(const FieldNet& net, const Coord& coord);

}  // namespace physgrid
