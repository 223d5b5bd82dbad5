#include <doctest.h>

#include <cmath>

#include "physgrid/errors.hpp"
#include "physgrid/pde_library.hpp"
#include "physgrid/rng.hpp"

using namespace physgrid;

namespace {

// u(x, y, t) = sin(p) + 0.2 sin(2p) + 0.4 cos(q), p = x - a t, q = 2 (y - b t),
// at random points with exact partials.
DerivativeBundle advection_bundle(std::size_t n, double a, double b, std::uint64_t seed) {
    DerivativeBundle d;
    d.points = n;
    d.variables = 1;
    for (Partial p : {Partial::Value, Partial::T, Partial::X, Partial::Y, Partial::XX, Partial::YY, Partial::XY, Partial::TT}) {
        d.partial[static_cast<std::size_t>(p)] = Tensor::matrix(n, 1);
    }
    Rng rng(seed);
    auto set = [&](Partial p, std::size_t i, double v) { (*d.partial[static_cast<std::size_t>(p)])(i, 0) = v; };
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(0, 6), y = rng.uniform(0, 6), t = rng.uniform(0, 4);
        const double px = x - a * t, py = 2.0 * (y - b * t);
        const double s1 = std::sin(px), c1 = std::cos(px), s2 = std::sin(2 * px), c2 = std::cos(2 * px);
        set(Partial::Value, i, s1 + 0.2 * s2 + 0.4 * std::cos(py));
        set(Partial::X, i, c1 + 0.4 * c2);
        set(Partial::Y, i, -0.8 * std::sin(py));
        set(Partial::XX, i, -s1 - 0.8 * s2);
        set(Partial::YY, i, -1.6 * std::cos(py));
        set(Partial::XY, i, 0.0);
        set(Partial::T, i, -a * (c1 + 0.4 * c2) + 0.8 * b * std::sin(py));
        set(Partial::TT, i, -a * a * (s1 + 0.8 * s2) - 1.6 * b * b * std::cos(py));
    }
    return d;
}

std::vector<std::string> texts(const std::vector<TermSpec>& terms, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const auto& t : terms) out.push_back(t.text(names));
    return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

EquationConfig cfg(std::string var, int order = 1, bool latent = false) {
    return EquationConfig{std::move(var), order, std::nullopt, latent};
}

EquationConfig advected(std::string var, std::string u, std::string v, bool latent = false) {
    return EquationConfig{std::move(var), 1, std::pair{std::move(u), std::move(v)}, latent};
}

}  // namespace

TEST_CASE("library: single variable without winds") {
    const std::vector<std::string> names{"u"};
    const auto lib = texts(default_library(names, cfg("u")), names);
    CHECK(lib == std::vector<std::string>{"1", "u", "du/dx", "du/dy", "d2u/dx2", "d2u/dy2", "u*du/dx", "u*du/dy"});
}

TEST_CASE("library: temperature advected by winds, pressure second order") {
    const std::vector<std::string> names{"T", "U10", "V10", "p"};
    const auto lib = texts(default_library(names, advected("T", "U10", "V10")), names);
    CHECK(contains(lib, "U10*dT/dx"));
    CHECK(contains(lib, "V10*dT/dy"));
    const EquationSystem sys = default_system(names, {cfg("p", 2)});
    CHECK(sys.equations[0].target_order == 2);
    const auto plib = texts(sys.equations[0].terms, names);
    CHECK(contains(plib, "d2p/dx2"));
    CHECK(contains(plib, "d2p/dy2"));
    CHECK_THROWS_AS(default_library(names, advected("T", "U", "V")), DataError);
    CHECK_THROWS_AS(default_library(names, cfg("q")), DataError);
}

TEST_CASE("terms: canonical text round trip and ordering") {
    const std::vector<std::string> names{"T", "U10"};
    const TermSpec a = TermSpec::product(Factor{0, 1, 0}, Factor{1, 0, 0});
    const TermSpec b = TermSpec::product(Factor{1, 0, 0}, Factor{0, 1, 0});
    CHECK(a == b);
    CHECK(a.text(names) == "U10*dT/dx");
    CHECK(TermSpec::parse("U10*dT/dx", names) == a);
    CHECK(TermSpec::parse("dT/dx*U10", names) == a);
    CHECK(TermSpec::parse("1", names).is_constant());
    CHECK_THROWS_AS(TermSpec::parse("d3T/dx3", names), DataError);
    CHECK_THROWS_AS(TermSpec({Factor{0, 3, 0}}), UsageError);
    CHECK_THROWS_AS(TermSpec({Factor{0}, Factor{0}, Factor{0}}), UsageError);
}

TEST_CASE("term matrix: entries are factor products") {
    DerivativeBundle d = advection_bundle(3, 0.5, 0.0, 1);
    (*d.partial[static_cast<std::size_t>(Partial::Value)])(1, 0) = 2.0;
    (*d.partial[static_cast<std::size_t>(Partial::X)])(1, 0) = 3.0;
    Equation eq;
    eq.terms = {TermSpec::constant(), TermSpec::product(Factor{0}, Factor{0, 1, 0}), TermSpec::of(Factor{0, 2, 0}),
                TermSpec::of(Factor{0})};
    eq.coefficients.assign(4, 0.0);
    const TermMatrix m = build_term_matrix(d, eq);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m.columns(i, 0) == 1.0);
    CHECK(m.columns(1, 1) == 6.0);
    // u = sin(x): the d2u/dx2 column is minus the u column.
    DerivativeBundle s = d;
    for (std::size_t i = 0; i < 3; ++i) {
        const double x = 0.7 * static_cast<double>(i) + 0.1;
        (*s.partial[static_cast<std::size_t>(Partial::Value)])(i, 0) = std::sin(x);
        (*s.partial[static_cast<std::size_t>(Partial::XX)])(i, 0) = -std::sin(x);
    }
    const TermMatrix ms = build_term_matrix(s, eq);
    for (std::size_t i = 0; i < 3; ++i) CHECK(ms.columns(i, 2) == -ms.columns(i, 3));
    DerivativeBundle missing = d;
    missing.partial[static_cast<std::size_t>(Partial::XX)].reset();
    CHECK_THROWS_AS(build_term_matrix(missing, eq), DataError);
}

TEST_CASE("fit: constructed oracle and normal equations") {
    Rng rng(4);
    const std::size_t n = 40;
    TermMatrix m{Tensor::matrix(n, 2), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        m.columns(i, 0) = rng.normal();
        m.columns(i, 1) = rng.normal();
        m.target[i] = -0.5 * m.columns(i, 0) + 0.2 * m.columns(i, 1);
    }
    FitResult f = fit_coefficients(m, 0.0);
    CHECK(std::abs(f.coefficients[0] + 0.5) < 1e-10);
    CHECK(std::abs(f.coefficients[1] - 0.2) < 1e-10);
    CHECK(f.residual_rms < 1e-12);

    for (std::size_t i = 0; i < n; ++i) m.target[i] += 0.1 * rng.normal();
    f = fit_coefficients(m, 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g += m.columns(i, k) * (m.target[i] - m.columns(i, 0) * f.coefficients[0] - m.columns(i, 1) * f.coefficients[1]);
        }
        CHECK(std::abs(g) < 1e-8);
    }

    std::fill(m.target.begin(), m.target.end(), 0.0);
    f = fit_coefficients(m, 1e-6);
    CHECK(f.coefficients[0] == doctest::Approx(0.0));
    CHECK(f.coefficients[1] == doctest::Approx(0.0));
}

TEST_CASE("fit: rank deficiency and bad input") {
    TermMatrix m{Tensor::matrix(10, 2), std::vector<double>(10, 1.0)};
    for (std::size_t i = 0; i < 10; ++i) m.columns(i, 0) = m.columns(i, 1) = static_cast<double>(i);
    CHECK_THROWS_AS(fit_coefficients(m, 0.0), NumericalError);
    CHECK_NOTHROW(fit_coefficients(m, 1e-6));
    CHECK_THROWS_AS(fit_coefficients(m, -1.0), UsageError);
    TermMatrix small{Tensor::matrix(1, 2), std::vector<double>(1)};
    CHECK_THROWS_AS(fit_coefficients(small, 1e-6), DataError);
}

TEST_CASE("fit: advection coefficients from exact derivatives") {
    const DerivativeBundle d = advection_bundle(400, 0.5, 0.3, 5);
    EquationSystem sys = default_system({"u"}, {cfg("u")});
    const Equation& eq = sys.equations[0];
    const TermMatrix m = build_term_matrix(d, eq);
    const FitResult f = fit_coefficients(m, 0.0);
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
        const std::string t = eq.terms[i].text(sys.variables);
        const double want = t == "du/dx" ? -0.5 : t == "du/dy" ? -0.3 : 0.0;
        CHECK(std::abs(f.coefficients[i] - want) < 1e-9);
    }
}

TEST_CASE("residual: exact solution, latent force substitution, zero system") {
    const DerivativeBundle d = advection_bundle(30, 0.5, 0.0, 6);
    EquationSystem sys = default_system({"u"}, {cfg("u")});
    Equation& eq = sys.equations[0];
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
        if (eq.terms[i].text(sys.variables) == "du/dx") eq.coefficients[i] = -0.5;
    }
    Tensor r = pde_residual(d, sys);
    for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(r(i, 0)) < 1e-14);

    EquationSystem zero = default_system({"u"}, {cfg("u")});
    r = pde_residual(d, zero);
    for (std::size_t i = 0; i < 30; ++i) CHECK(r(i, 0) == d(Partial::T, i, 0));

    zero.equations[0].latent_force = true;
    Tensor q = Tensor::matrix(30, 1);
    for (std::size_t i = 0; i < 30; ++i) q(i, 0) = d(Partial::T, i, 0);
    r = pde_residual(d, zero, &q);
    for (std::size_t i = 0; i < 30; ++i) CHECK(r(i, 0) == 0.0);
    CHECK_THROWS_AS(pde_residual(d, zero), UsageError);
    const Tensor bad = Tensor::matrix(29, 1);
    CHECK_THROWS_AS(pde_residual(d, zero, &bad), ShapeError);
}

TEST_CASE("system: JSON round trip and validation") {
    EquationSystem sys = default_system({"T", "U10", "V10"}, {advected("T", "U10", "V10", true)});
    for (std::size_t i = 0; i < sys.equations[0].coefficients.size(); ++i) {
        sys.equations[0].coefficients[i] = 0.1 * static_cast<double>(i) - 0.3;
    }
    const EquationSystem back = EquationSystem::from_json(sys.to_json());
    CHECK(back.variables == sys.variables);
    CHECK(back.equations[0].terms == sys.equations[0].terms);
    CHECK(back.equations[0].coefficients == sys.equations[0].coefficients);
    CHECK(back.equations[0].latent_force);
    CHECK_THROWS_AS(EquationSystem::from_json(nlohmann::json{{"bogus", 1}}), DataError);
    sys.equations[0].coefficients.pop_back();
    CHECK_THROWS_AS(sys.validate(), DataError);
}
