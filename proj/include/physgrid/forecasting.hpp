#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "physgrid/checkpoint.hpp"
#include "physgrid/finite_difference.hpp"
#include "physgrid/grid_field.hpp"
#include "physgrid/mlp.hpp"
#include "physgrid/pde_library.hpp"

namespace physgrid {

struct ForecastConfig {
    /// History is s+1 frames.
    std::size_t s = 9;
    /// Frames predicted per window.
    std::size_t r = 1;
    /// Physics-loss weight during fine-tuning.
    double beta = 1e-2;
    std::size_t hidden_layers = 2;
    std::size_t hidden_width = 32;
    /// Predict the change from the last history frame.
    bool skip = true;
    double learning_rate = 1e-3;
    /// Windows per optimizer step.
    std::size_t batch_windows = 4;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    /// First-derivative stencil of the physics loss; second derivatives are
    /// always the centred three-point form.
    StencilKind stencil = StencilKind::Central;

    void validate() const;
    nlohmann::json to_json() const;
};

/// Training windows of a T-frame record: T - r - s - 1; throws when < 1.
std::size_t window_count(std::size_t frames, std::size_t s, std::size_t r);

/// Shared per-cell network: for every cell, the s+1 history frames of the cell
/// and its four neighbours (edges replicate) map to r future frames.
class ForecastModel {
public:
    ForecastModel() = default;
    ForecastModel(Mlp mlp, std::size_t s, std::size_t r, std::vector<std::string> names, std::vector<Affine> scaling,
                  bool skip);

    /// Xavier init; scaling is a per-variable z-score of the training data.
    static ForecastModel init(const ForecastConfig& config, std::vector<std::string> names,
                              std::vector<Affine> scaling);

    std::size_t s() const { return s_; }
    std::size_t r() const { return r_; }
    std::size_t variables() const { return names_.size(); }
    bool skip() const { return skip_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Affine>& scaling() const { return scaling_; }
    const Mlp& mlp() const { return mlp_; }
    Mlp& mlp() { return mlp_; }
    std::size_t input_width() const { return (s_ + 1) * 5 * names_.size(); }
    std::size_t param_count() const { return mlp_.params().size(); }

    /// Network input for the window of `field` whose history starts at
    /// `first` (cells x input_width, normalized).
    Tensor window_input(const GridField& field, std::size_t first) const;

    /// Physical-unit predictions as a cells x (r h) tensor.
    Tensor predict_window(const GridField& field, std::size_t first) const;

    /// r frames following `history`, which must hold exactly s+1 frames.
    GridField forecast(const GridField& history) const;

    Checkpoint to_checkpoint() const;
    static ForecastModel from_checkpoint(const Checkpoint& c);

private:
    Mlp mlp_;
    std::size_t s_ = 0;
    std::size_t r_ = 0;
    std::vector<std::string> names_;
    std::vector<Affine> scaling_;
    bool skip_ = true;
};

/// Last history frame repeated r times.
GridField persistence(const GridField& history, std::size_t r);

/// Windows of a record: history starts at `first` for first in
/// [begin, begin + count).
struct WindowRange {
    std::size_t begin = 0;
    std::size_t count = 0;
};

/// Windows whose frames all lie in [0, end): count = end - r - s - 1.
WindowRange training_windows(std::size_t end, std::size_t s, std::size_t r);
/// Windows whose targets lie in [from, to) and whose history may reach back
/// before `from`.
WindowRange target_windows(std::size_t from, std::size_t to, std::size_t s, std::size_t r);

/// Frozen pieces of the physics target: the equation system and, for
/// latent-force equations, Q sampled on the record's grid (one column per
/// latent equation, layout like a GridField).
struct PhysicsTarget {
    EquationSystem system;
    std::optional<GridField> latent;

    /// Q from a latent-force network evaluated on `grid`'s coordinates.
    static PhysicsTarget from_nets(const EquationSystem& system, const FieldNet* latent_force, const GridField& grid);
};

/// Mean squared error over windows, cells, horizons and variables, physical
/// units.
double forecast_data_loss(const ForecastModel& model, const GridField& record,
                          std::optional<WindowRange> windows = std::nullopt);

/// Mean squared residual between the finite-difference time derivative of
/// the predictions and the frozen equations evaluated on them, over interior
/// cells. Uses the record's grid spacing.
double forecast_physics_loss(const ForecastModel& model, const GridField& record, const PhysicsTarget& target,
                             StencilKind stencil = StencilKind::Central,
                             std::optional<WindowRange> windows = std::nullopt);

/// The same residual for given frames: `last_history` (1 frame) followed by
/// `predicted` (r frames). `first_time` is the frame index of the first
/// prediction in the record `target.latent` was sampled on.
double frames_physics_loss(const GridField& last_history, const GridField& predicted, const PhysicsTarget& target,
                           std::size_t first_time, StencilKind stencil = StencilKind::Central);

struct ForecastEpoch {
    std::size_t epoch = 0;
    double data_loss = 0.0;
    double physics_loss = 0.0;
    double total = 0.0;
    double validation_loss = 0.0;
};

struct ForecastTrainResult {
    ForecastModel model;
    std::vector<ForecastEpoch> history;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    std::optional<std::string> aborted;

    std::string history_csv() const;
};

/// Adam on data loss + beta * physics loss over the training windows of an
/// 8:1:1 split of `record`; returns the best-validation checkpoint. With
/// `target` absent or beta = 0 this is plain data training.
ForecastTrainResult fit_forecaster(ForecastModel model, const GridField& record, const ForecastConfig& config,
                                   const PhysicsTarget* target);

/// Pre-training from scratch (beta forced to 0).
ForecastTrainResult pretrain(const GridField& record, const ForecastConfig& config);

/// Continues training a pre-trained model with the physics term.
ForecastTrainResult finetune(const ForecastModel& model, const GridField& record, const PhysicsTarget& target,
                             const ForecastConfig& config);

/// Predictions for every window of a range stacked as (window, horizon)
/// pairs, with the matching truth frames from `truth` (same grid as record).
struct WindowedScores {
    /// RMSE per horizon step (index j = lead j+1) and variable.
    std::vector<std::vector<double>> rmse_by_lead;
    /// RMSE over all leads, per variable.
    std::vector<double> rmse;
};

WindowedScores evaluate_windows(const ForecastModel& model, const GridField& record, const GridField& truth,
                                WindowRange windows);
WindowedScores evaluate_persistence(const GridField& record, const GridField& truth, WindowRange windows,
                                    std::size_t s, std::size_t r);

}  // namespace physgrid
