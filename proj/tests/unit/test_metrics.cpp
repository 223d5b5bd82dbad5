#include <doctest.h>

#include <cmath>

#include "physgrid/errors.hpp"
#include "physgrid/metrics.hpp"
#include "physgrid/rng.hpp"

using namespace physgrid;

namespace {

GridField field(std::size_t nt, std::vector<double> data, std::size_t h = 1) {
    std::vector<std::string> names;
    for (std::size_t v = 0; v < h; ++v) names.push_back("v" + std::to_string(v));
    const std::size_t cells = data.size() / (nt * h);
    return GridField(nt, 1, cells, names, GridAxes{}, std::move(data));
}

GridField random(std::size_t nt, std::size_t cells, std::size_t h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> d(nt * cells * h);
    for (double& v : d) v = rng.normal();
    return field(nt, std::move(d), h);
}

}  // namespace

TEST_CASE("rmse: definition examples") {
    CHECK(rmse(field(1, {1, 2}), field(1, {0, 0}))[0] == doctest::Approx(std::sqrt(2.5)));
    CHECK(std::sqrt(2.5) == doctest::Approx(1.58114).epsilon(1e-5));
    const GridField t = random(3, 4, 2, 1);
    for (double v : rmse(t, t)) CHECK(v == 0.0);
    GridField p = t;
    for (double& v : p.data()) v -= 0.75;
    for (double v : rmse(p, t)) CHECK(v == doctest::Approx(0.75));
    CHECK_THROWS_AS(rmse(random(2, 4, 2, 1), t), ShapeError);
}

TEST_CASE("rmse: mask selects points") {
    const GridField p = field(1, {1, 10, 3}), t = field(1, {0, 0, 0});
    const std::vector<std::uint8_t> mask{1, 0, 1};
    CHECK(rmse(p, t, &mask)[0] == doctest::Approx(std::sqrt(5.0)));
    const std::vector<std::uint8_t> none{0, 0, 0};
    CHECK_THROWS_AS(rmse(p, t, &none), DataError);
}

TEST_CASE("rmse: shifting by c moves it by at least |c| - old") {
    const GridField t = random(4, 9, 1, 2), p = random(4, 9, 1, 3);
    const double old = rmse(p, t)[0];
    for (double c : {0.1, 1.0, -3.0}) {
        GridField q = p;
        for (double& v : q.data()) v += c;
        CHECK(rmse(q, t)[0] >= std::abs(c) - old - 1e-12);
    }
}

TEST_CASE("acc: +1, -1, degenerate, affine invariance") {
    const GridField clim = random(1, 6, 2, 4);
    const GridField truth = [&] {
        GridField f = random(5, 6, 2, 5);
        return f;
    }();
    auto with_anomaly = [&](double k, double shift) {
        GridField f = truth;
        for (std::size_t t = 0; t < 5; ++t) {
            for (std::size_t i = 0; i < 12; ++i) {
                f.data()[t * 12 + i] = clim.data()[i] + k * (truth.data()[t * 12 + i] - clim.data()[i]) + shift;
            }
        }
        return f;
    };
    AccResult a = acc(truth, truth, clim);
    for (double v : a.value) CHECK(v == doctest::Approx(1.0));
    a = acc(with_anomaly(-1.0, 0.0), truth, clim);
    for (double v : a.value) CHECK(v == doctest::Approx(-1.0));
    a = acc(with_anomaly(0.0, 0.0), truth, clim);
    for (std::size_t v = 0; v < 2; ++v) {
        CHECK(a.value[v] == 0.0);
        CHECK(a.degenerate[v]);
    }
    const GridField p = random(5, 6, 2, 6);
    const AccResult base = acc(p, truth, clim);
    GridField p2 = p, t2 = truth;
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t i = 0; i < 12; ++i) {
            p2.data()[t * 12 + i] = clim.data()[i] + 3.5 * (p.data()[t * 12 + i] - clim.data()[i]);
            t2.data()[t * 12 + i] = clim.data()[i] + 3.5 * (truth.data()[t * 12 + i] - clim.data()[i]);
        }
    }
    const AccResult scaled = acc(p2, t2, clim);
    for (std::size_t v = 0; v < 2; ++v) {
        CHECK(scaled.value[v] == doctest::Approx(base.value[v]).epsilon(1e-12));
        CHECK(std::abs(base.value[v]) <= 1.0);
    }
    CHECK_THROWS_AS(acc(p, truth, truth), ShapeError);
}

TEST_CASE("climatology: per-cell mean") {
    const GridField g = field(2, {1, 2, 3, 6});
    const GridField c = climatology(g);
    CHECK(c.nt() == 1);
    CHECK(c.data() == std::vector<double>{2, 4});
}

TEST_CASE("improvement: published examples and identity") {
    CHECK(*rmse_improvement(0.599, 0.556) == doctest::Approx(7.18).epsilon(1e-3));
    CHECK(*acc_improvement(0.465, 0.530) == doctest::Approx(13.98).epsilon(1e-3));
    CHECK(!rmse_improvement(0.0, 1.0));
    CHECK(!acc_improvement(0.0, 1.0));
    const GridField t = random(3, 4, 2, 7), p = random(3, 4, 2, 8);
    const MetricRow row = score("model", p, t, climatology(t));
    const ImprovementRow same = improvement(row, row);
    for (const auto& v : same.rmse) CHECK(*v == 0.0);
    for (const auto& v : same.acc) CHECK(*v == 0.0);
    CHECK(*same.average_rmse == 0.0);
}

TEST_CASE("report: averages, JSON round trip, table") {
    const GridField t = random(3, 4, 2, 9), p = random(3, 4, 2, 10), q = random(3, 4, 2, 11);
    MetricReport base{"base", {"v0", "v1"}, {score("g", p, t, climatology(t))}, {}, true};
    MetricReport plus{"plus", {"v0", "v1"}, {score("g", q, t, climatology(t))}, {}, true};
    const MetricRow& r = base.rows[0];
    CHECK(r.average_rmse() == doctest::Approx((r.scores[0].rmse + r.scores[1].rmse) / 2));
    plus.improvements = improvement(base, plus);
    CHECK(plus.improvements.size() == 1);
    const MetricReport back = MetricReport::from_json(plus.to_json());
    CHECK(back.variables == plus.variables);
    CHECK(back.rows[0].scores[1].rmse == plus.rows[0].scores[1].rmse);
    CHECK(*back.improvements[0].rmse[0] == *plus.improvements[0].rmse[0]);
    const std::string table = plus.table();
    CHECK(table.find("RMSE") != std::string::npos);
    CHECK(table.find("ACC") != std::string::npos);
    CHECK(table.find("Improv") != std::string::npos);
    CHECK_THROWS_AS(MetricReport::from_json(nlohmann::json::array()), DataError);
    MetricReport other = plus;
    other.variables = {"a", "b"};
    CHECK_THROWS_AS(improvement(base, other), ShapeError);
}
