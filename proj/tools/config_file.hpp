#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "physgrid/forecasting.hpp"
#include "physgrid/training.hpp"

namespace physgrid::cli {

using ConfigValue = std::variant<bool, double, std::string>;

/// Flat view of a TOML-style file: `[section]` headers, `key = value` lines,
/// `#` comments. Values are numbers, true/false or double-quoted strings.
/// Keys are stored as "section.key" ("key" before any header).
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::string& origin = "config");
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.contains(key); }
    double number(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::string text(const std::string& key) const;

    /// Section names that start with `prefix` followed by a dot, e.g. the
    /// variable names of "equation.T".
    std::vector<std::string> subsections(const std::string& prefix) const;

    /// Throws UsageError naming the first key no reader asked for.
    void reject_unused() const;

private:
    const ConfigValue& get(const std::string& key) const;

    std::string origin_;
    std::map<std::string, ConfigValue> values_;
    std::set<std::string> sections_;
    mutable std::set<std::string> used_;
};

/// Overrides TrainConfig fields from the top-level and [train] keys plus
/// [equation.<var>] sections (order, advected_by = "U,V", latent_force).
void apply(const ConfigFile& file, TrainConfig& config);

/// Overrides ForecastConfig fields from [forecast] keys.
void apply(const ConfigFile& file, ForecastConfig& config);

/// "key = value" lines of a JSON object, nested objects flattened with dots.
std::string describe(const nlohmann::json& config);

}  // namespace physgrid::cli
