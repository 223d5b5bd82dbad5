#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "physgrid/grid_field.hpp"

namespace physgrid {

/// Per-cell, per-variable mean of a training split: one frame.
GridField climatology(const GridField& train);

/// Per-variable sqrt(mean squared error). `mask` (layout t, y, x) keeps the
/// points where it is nonzero.
std::vector<double> rmse(const GridField& pred, const GridField& truth, const std::vector<std::uint8_t>* mask = nullptr);

struct AccResult {
    std::vector<double> value;
    /// True where either anomaly field has zero norm; value is then 0.
    std::vector<bool> degenerate;
};

/// Centered anomaly correlation per variable, pooled over space and time.
AccResult acc(const GridField& pred, const GridField& truth, const GridField& climatology);

struct VariableScore {
    double rmse = 0.0;
    double acc = 0.0;
    bool acc_degenerate = false;
};

/// One line of a report: a model, or a model at one horizon.
struct MetricRow {
    std::string label;
    std::vector<VariableScore> scores;

    double average_rmse() const;
    double average_acc() const;
};

MetricRow score(const std::string& label, const GridField& pred, const GridField& truth,
                const std::optional<GridField>& climatology, const std::vector<std::uint8_t>* mask = nullptr);

/// Percent improvement of one row over another; nullopt where the base is 0.
struct ImprovementRow {
    std::string label;
    std::vector<std::optional<double>> rmse;
    std::vector<std::optional<double>> acc;
    std::optional<double> average_rmse;
    std::optional<double> average_acc;
};

/// (base - plus) / base * 100: lower-is-better.
std::optional<double> rmse_improvement(double base, double plus);
/// (plus - base) / base * 100: higher-is-better.
std::optional<double> acc_improvement(double base, double plus);

ImprovementRow improvement(const MetricRow& base, const MetricRow& plus, const std::string& label = "Improv (%)");

struct MetricReport {
    std::string title;
    std::vector<std::string> variables;
    std::vector<MetricRow> rows;
    std::vector<ImprovementRow> improvements;
    bool has_acc = true;

    /// Every number in the table, averages included.
    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);
    std::string table() const;
};

/// Row-by-row improvement of `plus` over `base`; both must list the same
/// variables and row labels.
std::vector<ImprovementRow> improvement(const MetricReport& base, const MetricReport& plus);

}  // namespace physgrid
