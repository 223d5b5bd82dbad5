#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "config_file.hpp"
#include "manifest.hpp"
#include "physgrid/errors.hpp"
#include "svg_plot.hpp"

using namespace physgrid;
using namespace physgrid::cli;

TEST_CASE("config: scalars, sections and overrides") {
    const ConfigFile f = ConfigFile::parse(R"(
epochs = 7          # comment
alpha = 0.5
[train]
learning_rate = 1e-3
[equation.T]
order = 2
latent_force = true
advected_by = "U10,V10"
[forecast]
s = 4
stencil = "backward"
beta = 0
)",
                                           "inline");
    TrainConfig tc;
    apply(f, tc);
    CHECK(tc.epochs == 7);
    CHECK(tc.alpha == 0.5);
    CHECK(tc.learning_rate == 1e-3);
    REQUIRE(tc.equations.size() == 1);
    CHECK(tc.equations[0].variable == "T");
    CHECK(tc.equations[0].target_order == 2);
    CHECK(tc.equations[0].latent_force);
    REQUIRE(tc.equations[0].advected_by.has_value());
    CHECK(tc.equations[0].advected_by->first == "U10");
    CHECK(tc.equations[0].advected_by->second == "V10");

    ForecastConfig fc;
    apply(f, fc);
    CHECK(fc.s == 4);
    CHECK(fc.beta == 0.0);
    CHECK(fc.stencil == StencilKind::Backward);
    CHECK_NOTHROW(f.reject_unused());
}

TEST_CASE("config: errors") {
    CHECK_THROWS_AS(ConfigFile::parse("epochs 3", "x").reject_unused(), UsageError);
    CHECK_THROWS_AS(ConfigFile::parse("epochs = \"3", "x"), UsageError);

    const ConfigFile typo = ConfigFile::parse("epoch = 3", "x");
    TrainConfig tc;
    apply(typo, tc);
    CHECK_THROWS_AS(typo.reject_unused(), UsageError);

    const ConfigFile wrong = ConfigFile::parse("epochs = \"many\"", "x");
    CHECK_THROWS_AS(apply(wrong, tc), UsageError);
    const ConfigFile negative = ConfigFile::parse("epochs = -2", "x");
    CHECK_THROWS_AS(apply(negative, tc), UsageError);

    CHECK_THROWS_AS(ConfigFile::load("/nonexistent/config.toml"), IoError);
}

TEST_CASE("sha256 of known inputs") {
    const auto dir = std::filesystem::temp_directory_path() / "physgrid_cli_support";
    std::filesystem::create_directories(dir);
    write_text(dir / "abc.txt", "abc");
    CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    write_text(dir / "empty.txt", "");
    CHECK(sha256_file(dir / "empty.txt") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK_THROWS_AS(sha256_file(dir / "missing"), IoError);

    RunManifest m("test", {"physgrid", "test"});
    m.set_config({{"k", 1}});
    m.add_seed("main", 42);
    m.add_input(dir / "abc.txt");
    m.add_output(dir / "empty.txt");
    const auto path = m.write(dir);
    std::ifstream in(path);
    const nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j["command"] == "test");
    CHECK(j["seeds"]["main"] == 42);
    CHECK(j["inputs"][0]["sha256"] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(j["timings_seconds"].contains("total"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("svg chart: one polyline per series, escaped labels, log axis skips non-positive") {
    const std::string svg = line_chart({{"a<b", {0, 1, 2}, {1, 10, 100}}, {"c", {0, 1}, {0.0, 5.0}}},
                                       {"t & u", "epoch", "loss", true});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(svg.find("t &amp; u") != std::string::npos);
    std::size_t count = 0;
    for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
    CHECK(count == 2);
    CHECK(svg.find("nan") == std::string::npos);
    CHECK(svg.find("inf") == std::string::npos);
}
