#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "physgrid/errors.hpp"
#include "physgrid/finite_difference.hpp"
#include "physgrid/rng.hpp"
#include "physgrid/synthetic.hpp"

using namespace physgrid;

namespace {

// n samples of f along one axis with spacing h starting at origin.
GridField line(Axis axis, std::size_t n, double h, double origin, const std::function<double(double)>& f) {
    GridAxes a;
    std::size_t nt = 1, ny = 1, nx = 1;
    if (axis == Axis::X) { nx = n; a.dx = h; a.x0 = origin; }
    if (axis == Axis::Y) { ny = n; a.dy = h; a.y0 = origin; }
    if (axis == Axis::T) { nt = n; a.dt = h; a.t0 = origin; }
    GridField g(nt, ny, nx, {"u"}, a);
    for (std::size_t i = 0; i < n; ++i) g.data()[i] = f(origin + static_cast<double>(i) * h);
    return g;
}

double max_interior_error(const FdResult& r, double origin, double h, const std::function<double(double)>& exact) {
    double e = 0.0;
    for (std::size_t i = 0; i < r.field.data().size(); ++i) {
        if (r.boundary[i]) continue;
        e = std::max(e, std::abs(r.field.data()[i] - exact(origin + static_cast<double>(i) * h)));
    }
    return e;
}

double slope(StencilKind kind, int order) {
    std::vector<double> lh, le;
    for (std::size_t n : {40u, 80u, 160u, 320u}) {
        const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
        const GridField g = line(Axis::X, n, h, 0.0, [](double x) { return std::sin(x); });
        const FdResult r = fd_derivative(g, Stencil{kind, Axis::X, order}, 0);
        auto exact = order == 1 ? std::function<double(double)>([](double x) { return std::cos(x); })
                                : std::function<double(double)>([](double x) { return -std::sin(x); });
        lh.push_back(std::log(h));
        le.push_back(std::log(max_interior_error(r, 0.0, h, exact)));
    }
    const double mh = (lh[0] + lh[1] + lh[2] + lh[3]) / 4, me = (le[0] + le[1] + le[2] + le[3]) / 4;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        num += (lh[i] - mh) * (le[i] - me);
        den += (lh[i] - mh) * (lh[i] - mh);
    }
    return num / den;
}

}  // namespace

TEST_CASE("fd: affine fields are exact for every stencil and axis") {
    for (Axis axis : {Axis::X, Axis::Y, Axis::T}) {
        const GridField g = line(axis, 7, 0.1, 0.3, [](double t) { return 3.0 * t + 1.0; });
        for (StencilKind k : {StencilKind::Forward, StencilKind::Backward, StencilKind::Central}) {
            const FdResult r = fd_derivative(g, Stencil{k, axis, 1}, 0);
            for (double v : r.field.data()) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("fd: central is exact for quadratics") {
    const GridField g = line(Axis::T, 21, 0.1, 0.0, [](double t) { return t * t; });
    const FdResult r = fd_derivative(g, Stencil{StencilKind::Central, Axis::T, 1}, 0);
    CHECK(r.field.data()[10] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(r.field.names()[0] == "du/dt");
    const FdResult r2 = fd_derivative(g, Stencil{StencilKind::Central, Axis::T, 2}, 0);
    for (double v : r2.field.data()) CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("fd: halving the spacing quarters the central error") {
    auto err = [](std::size_t n) {
        const double h = 1.0 / static_cast<double>(n);
        const GridField g = line(Axis::T, n + 1, h, 0.0, [](double t) { return std::sin(t); });
        return max_interior_error(fd_derivative(g, Stencil{StencilKind::Central, Axis::T, 1}, 0), 0.0, h,
                                  [](double t) { return std::cos(t); });
    };
    const double ratio = err(20) / err(40);
    CHECK(ratio > 3.8);
    CHECK(ratio < 4.2);
}

TEST_CASE("fd: convergence slopes") {
    CHECK(std::abs(slope(StencilKind::Central, 1) - 2.0) < 0.2);
    CHECK(std::abs(slope(StencilKind::Forward, 1) - 1.0) < 0.2);
    CHECK(std::abs(slope(StencilKind::Backward, 1) - 1.0) < 0.2);
    CHECK(std::abs(slope(StencilKind::Central, 2) - 2.0) < 0.2);
}

TEST_CASE("fd: boundary mask marks the fallback points") {
    const GridField g = line(Axis::X, 6, 0.5, 0.0, [](double x) { return x * x; });
    const FdResult c = fd_derivative(g, Stencil{StencilKind::Central, Axis::X, 1}, 0);
    CHECK(c.boundary == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 1});
    const FdResult f = fd_derivative(g, Stencil{StencilKind::Forward, Axis::X, 1}, 0);
    CHECK(f.boundary == std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1});
    const FdResult b = fd_derivative(g, Stencil{StencilKind::Backward, Axis::X, 1}, 0);
    CHECK(b.boundary == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0});
    // one-sided first-order fallback at the left edge: (u1 - u0) / h
    CHECK(c.field.data()[0] == doctest::Approx(0.5));
}

TEST_CASE("fd: linearity") {
    Rng rng(9);
    GridField f(4, 5, 6, {"a", "b"}, GridAxes{0.0, 0.3, 0.0, 0.2, 0.0, 0.1, "", ""});
    for (double& v : f.data()) v = rng.normal();
    GridField sum(4, 5, 6, {"s"}, f.axes());
    const double alpha = 1.7, beta = -0.6;
    for (std::size_t i = 0; i < f.points(); ++i) sum.data()[i] = alpha * f.data()[2 * i] + beta * f.data()[2 * i + 1];
    for (Axis axis : {Axis::X, Axis::Y, Axis::T}) {
        for (int order : {1, 2}) {
            const Stencil s{StencilKind::Central, axis, order};
            const FdResult da = fd_derivative(f, s, 0), db = fd_derivative(f, s, 1), ds = fd_derivative(sum, s, 0);
            double scale = 0.0, err = 0.0;
            for (std::size_t i = 0; i < f.points(); ++i) {
                const double lin = alpha * da.field.data()[i] + beta * db.field.data()[i];
                scale = std::max(scale, std::abs(lin));
                err = std::max(err, std::abs(ds.field.data()[i] - lin));
            }
            CHECK(err <= 1e-12 * scale);
        }
    }
}

TEST_CASE("fd: errors") {
    const GridField two = line(Axis::X, 2, 0.1, 0.0, [](double x) { return x; });
    CHECK_THROWS_AS(fd_derivative(two, Stencil{StencilKind::Central, Axis::X, 1}, 0), DataError);
    CHECK_NOTHROW(fd_derivative(two, Stencil{StencilKind::Forward, Axis::X, 1}, 0));
    CHECK_THROWS_AS(fd_derivative(two, Stencil{StencilKind::Forward, Axis::X, 2}, 0), DataError);
    CHECK_THROWS_AS(fd_derivative(two, Stencil{StencilKind::Forward, Axis::X, 3}, 0), UsageError);
    CHECK_THROWS_AS(fd_derivative(two, Stencil{StencilKind::Forward, Axis::X, 1}, 1), UsageError);
    CHECK_THROWS_AS(parse_stencil("upwind"), UsageError);
    CHECK(parse_stencil("central") == StencilKind::Central);
}

TEST_CASE("fd time of prediction") {
    GridAxes a;
    a.dt = 0.5;
    GridField hist(3, 2, 2, {"u"}, a), pred(4, 2, 2, {"u"}, a);
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t c = 0; c < 4; ++c) hist.data()[t * 4 + c] = 2.0 * a.dt * static_cast<double>(t);
    }
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t c = 0; c < 4; ++c) pred.data()[t * 4 + c] = 2.0 * a.dt * static_cast<double>(t + 3);
    }
    GridField d = fd_time_of_prediction(hist, pred);
    CHECK(d.nt() == 4);
    for (double v : d.data()) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));

    std::fill(hist.data().begin(), hist.data().end(), 1.5);
    std::fill(pred.data().begin(), pred.data().end(), 1.5);
    d = fd_time_of_prediction(hist, pred);
    for (double v : d.data()) CHECK(v == 0.0);

    CHECK_THROWS_AS(fd_time_of_prediction(hist, GridField()), UsageError);
    CHECK_THROWS_AS(fd_time_of_prediction(hist, GridField(1, 3, 2, {"u"}, a)), ShapeError);
}

TEST_CASE("fd: advection solution satisfies u_t = -0.5 u_x within the generator bound") {
    SyntheticCase c = SyntheticCase::defaults(CaseId::Advection2D);
    c.nx = c.ny = 32;
    c.nt = 30;
    c.seed = 2;
    const GeneratedCase g = generate(c);
    const FdResult ut = fd_derivative(g.coarse, Stencil{StencilKind::Central, Axis::T, 1}, 0);
    const FdResult ux = fd_derivative(g.coarse, Stencil{StencilKind::Central, Axis::X, 1}, 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.coarse.points(); ++i) {
        if (ut.boundary[i] || ux.boundary[i]) continue;
        worst = std::max(worst, std::abs(ut.field.data()[i] + 0.5 * ux.field.data()[i]));
    }
    CHECK(worst <= g.check.bound);
    CHECK(worst > 0.0);
}
