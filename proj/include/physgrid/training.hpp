#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "physgrid/field_net.hpp"
#include "physgrid/grid_field.hpp"
#include "physgrid/pde_library.hpp"

namespace physgrid {

struct TrainConfig {
    /// Physics-loss weight.
    double alpha = 10.0;
    /// Optional L2 weights on the surrogate and latent-force parameters.
    double sigma_theta = 0.0;
    double sigma_pi = 0.0;
    double learning_rate = 1e-4;
    /// Data points per step.
    std::size_t batch_size = 10000;
    /// Collocation points per step; 0 means batch_size.
    std::size_t collocation_batch = 0;
    std::size_t epochs = 50;
    /// Collocation grid; 0 means 2n, 2m and the training frame count.
    std::size_t collocation_nx = 0;
    std::size_t collocation_ny = 0;
    std::size_t collocation_nt = 0;
    /// Xi is refit every this many epochs once warmup is over.
    std::size_t refit_period = 10;
    /// Epochs of pure data fitting before the first Xi fit.
    std::size_t warmup_epochs = 10;
    /// Collocation points used by each closed-form Xi fit.
    std::size_t refit_points = 20000;
    double ridge = 1e-6;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::size_t hidden_layers = 8;
    std::size_t hidden_width = 100;
    std::size_t force_hidden_layers = 8;
    std::size_t force_hidden_width = 100;
    /// Fraction of training grid points the data loss sees.
    double data_fraction = 1.0;
    /// Empty: one first-order equation per variable without latent force.
    std::vector<EquationConfig> equations;

    void validate() const;
    nlohmann::json to_json() const;
};

/// Coordinates with physical-unit targets, row-major points x variables.
struct DataBatch {
    std::vector<Coord> coords;
    std::vector<double> values;
};

/// Every point of `field` as a batch.
DataBatch grid_batch(const GridField& field);

/// Mean squared error over points and variables in the net's normalized
/// output units.
double data_loss(const FieldNet& net, const DataBatch& batch);

/// Mean squared PDE residual over points and equations. Each residual is
/// divided by the governed variable's output scale so the loss is in
/// normalized units per unit time.
double physics_loss(const FieldNet& net, const FieldNet* latent_force, const EquationSystem& system,
                    std::span<const Coord> collocation);

struct EpochRecord {
    std::size_t epoch = 0;
    double data_loss = 0.0;
    double physics_loss = 0.0;
    double regularization = 0.0;
    /// Mean of the per-step totals as evaluated on the tape.
    double total = 0.0;
    double validation_loss = 0.0;
    /// Index into TrainResult::snapshots of the Xi in force, -1 before the
    /// first fit.
    long xi_snapshot = -1;
    double seconds = 0.0;
};

struct TrainResult {
    FieldNet surrogate;
    std::optional<FieldNet> latent_force;
    EquationSystem system;
    std::vector<EpochRecord> history;
    std::vector<EquationSystem> snapshots;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    /// Set when training stopped on a non-finite loss; the result then holds
    /// the best finite state reached.
    std::optional<std::string> aborted;
    double seconds = 0.0;

    std::string history_csv() const;
};

/// Fits the surrogate (and latent force) to the training split of `dataset`
/// and selects the epoch with the lowest validation data loss.
TrainResult train(const GridField& dataset, const TrainConfig& config);

/// Refits Xi on `points` collocation coordinates in the box [lo, hi].
void refit_coefficients(const FieldNet& net, const FieldNet* latent_force, EquationSystem& system,
                        std::span<const Coord> points, double ridge, double threshold);

/// Evaluates the net on a grid with the given axes.
GridField evaluate_grid(const FieldNet& net, const std::vector<std::string>& names, std::size_t nt, std::size_t ny,
                        std::size_t nx, const GridAxes& axes);

/// Spatial refinement by `factor` of the grid described by `base`:
/// (m, n) -> (factor (m-1) + 1, factor (n-1) + 1), same frames.
GridField downscale(const FieldNet& net, const GridField& base, std::size_t factor);

/// Explicit dims spanning the box of `base` (endpoints kept).
GridField downscale(const FieldNet& net, const GridField& base, std::size_t nt, std::size_t ny, std::size_t nx);

}  // namespace physgrid
