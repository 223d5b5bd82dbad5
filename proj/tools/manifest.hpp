#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace physgrid::cli {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written next to every command's outputs.
class RunManifest {
public:
    RunManifest(std::string command, std::vector<std::string> argv);

    void set_config(nlohmann::json config) { doc_["config"] = std::move(config); }
    void add_seed(const std::string& name, std::uint64_t seed) { doc_["seeds"][name] = seed; }
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void add_timing(const std::string& name, double seconds) { doc_["timings_seconds"][name] = seconds; }
    nlohmann::json& extra() { return doc_["details"]; }

    /// Hashes every registered file and writes manifest.json into `dir`.
    std::filesystem::path write(const std::filesystem::path& dir);

private:
    nlohmann::json doc_;
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> outputs_;
    std::chrono::steady_clock::time_point start_;
};

/// Writes text to a file, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace physgrid::cli
