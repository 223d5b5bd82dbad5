#include <doctest.h>

#include <cmath>
#include <cstring>

#include "physgrid/errors.hpp"
#include "physgrid/forecasting.hpp"
#include "physgrid/grid_io.hpp"
#include "physgrid/synthetic.hpp"

using namespace physgrid;

namespace {

ForecastModel zero_model(std::size_t s, std::size_t r, bool skip, std::vector<Affine> scaling) {
    ForecastConfig fc;
    fc.s = s;
    fc.r = r;
    fc.skip = skip;
    fc.hidden_width = 4;
    ForecastModel m = ForecastModel::init(fc, {"u"}, std::move(scaling));
    std::fill(m.mlp().params().begin(), m.mlp().params().end(), 0.0);
    return m;
}

// u(t) = t on every cell, unit frame spacing.
GridField ramp(std::size_t nt, std::size_t n = 4, double slope = 1.0) {
    GridField f(nt, n, n, {"u"}, GridAxes{});
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t c = 0; c < f.cells(); ++c) f.data()[t * f.cells() + c] = slope * static_cast<double>(t);
    }
    return f;
}

EquationSystem zero_system() {
    return default_system({"u"}, {EquationConfig{"u", 1, std::nullopt, false}});
}

std::uint64_t checksum(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint8_t b : bytes) h = (h ^ b) * 1099511628211ULL;
    return h;
}

}  // namespace

TEST_CASE("windows: count and minimal record") {
    CHECK(window_count(12, 9, 1) == 1);
    CHECK_THROWS_AS(window_count(11, 9, 1), DataError);
    CHECK(window_count(100, 9, 8) == 82);
    const WindowRange w = training_windows(100, 9, 8);
    CHECK(w.begin == 0);
    CHECK(w.count == 82);
    const WindowRange v = target_windows(80, 90, 9, 1);
    // targets at frames first + s + 1 in [80, 90)
    CHECK(v.begin + 10 == 80);
    CHECK(v.count == 10);
    ForecastConfig fc;
    fc.s = 0;
    CHECK_THROWS_AS(fc.validate(), UsageError);
}

TEST_CASE("persistence baseline") {
    const GridField h = ramp(3);
    const GridField p = persistence(h, 4);
    CHECK(p.nt() == 4);
    for (double v : p.data()) CHECK(v == 2.0);
    CHECK(p.axes().t0 == 3.0);
}

TEST_CASE("zero-weight model without skip predicts the training mean") {
    const ForecastModel m = zero_model(2, 2, false, {Affine{0.7, 2.0}});
    const GridField out = m.forecast(ramp(3));
    for (double v : out.data()) CHECK(v == doctest::Approx(0.7));
    CHECK_THROWS_AS(m.forecast(ramp(4)), UsageError);
}

TEST_CASE("data loss: persistence examples") {
    // zero weights with the identity skip are persistence
    const ForecastModel m = zero_model(2, 1, true, {Affine{0.0, 1.0}});
    CHECK(forecast_data_loss(m, ramp(12)) == doctest::Approx(1.0));
    GridField flat = ramp(12);
    std::fill(flat.data().begin(), flat.data().end(), 3.0);
    CHECK(forecast_data_loss(m, flat) == 0.0);
}

TEST_CASE("physics loss: exact solutions give zero") {
    const ForecastModel m = zero_model(2, 3, true, {Affine{0.0, 1.0}});
    GridField flat = ramp(12, 5);
    std::fill(flat.data().begin(), flat.data().end(), -1.0);
    PhysicsTarget target{zero_system(), std::nullopt};
    CHECK(forecast_physics_loss(m, flat, target) == 0.0);

    // u = 2t satisfies u_t = 2 exactly; r frames of the truth as "predictions"
    const GridField line = ramp(6, 5, 2.0);
    EquationSystem sys = zero_system();
    sys.equations[0].coefficients[0] = 2.0;  // constant term
    PhysicsTarget t2{sys, std::nullopt};
    CHECK(frames_physics_loss(line.frames(2, 3), line.frames(3, 6), t2, 3) == doctest::Approx(0.0).epsilon(1e-20));
    // a repeated frame has u_t = 0 against a target of 2
    CHECK(frames_physics_loss(line.frames(2, 3), line.frames(2, 3), t2, 3) == doctest::Approx(4.0));
    CHECK_THROWS_AS(frames_physics_loss(line.frames(2, 3), GridField(), t2, 3), UsageError);
}

TEST_CASE("physics loss: advection truth is within the truncation bound") {
    SyntheticCase c = SyntheticCase::defaults(CaseId::Advection2D);
    c.nx = c.ny = 16;
    c.nt = 12;
    c.seed = 1;
    const GeneratedCase g = generate(c);
    PhysicsTarget target{g.truth, std::nullopt};
    const GridField& f = g.fine2x;
    const double loss = frames_physics_loss(f.frames(5, 6), f.frames(6, 9), target, 6);
    const double stale = frames_physics_loss(f.frames(5, 6), persistence(f.frames(5, 6), 3), target, 6);
    CHECK(loss < 1e-2 * stale);
}

TEST_CASE("finetune: frozen physics untouched, beta 0 is data training, checkpoints round trip") {
    SyntheticCase c = SyntheticCase::defaults(CaseId::Advection2D);
    c.nx = c.ny = 6;
    c.nt = 40;
    c.seed = 2;
    const GeneratedCase g = generate(c);
    ForecastConfig fc;
    fc.s = 3;
    fc.r = 2;
    fc.hidden_width = 8;
    fc.epochs = 2;
    fc.seed = 5;
    const ForecastTrainResult pre = pretrain(g.coarse, fc);
    CHECK(pre.history.size() == 2);
    for (const auto& e : pre.history) CHECK(e.physics_loss == 0.0);
    CHECK(pre.history[pre.best_epoch].validation_loss == pre.best_validation_loss);

    const PhysicsTarget target{g.truth, std::nullopt};
    const std::string before_json = target.system.to_json().dump();
    const auto before = checksum(std::vector<std::uint8_t>(before_json.begin(), before_json.end()));
    fc.beta = 1e-2;
    const ForecastTrainResult tuned = finetune(pre.model, g.coarse, target, fc);
    const std::string after_json = target.system.to_json().dump();
    CHECK(checksum(std::vector<std::uint8_t>(after_json.begin(), after_json.end())) == before);
    for (const auto& e : tuned.history) {
        CHECK(e.physics_loss > 0.0);
        CHECK(std::abs(e.total - (e.data_loss + fc.beta * e.physics_loss)) <= 1e-12 * std::max(1.0, e.total));
    }

    fc.beta = 0.0;
    const ForecastTrainResult a = finetune(pre.model, g.coarse, target, fc);
    const ForecastTrainResult b = fit_forecaster(pre.model, g.coarse, fc, nullptr);
    CHECK(a.history_csv() == b.history_csv());

    const auto bytes = encode_checkpoint(a.model.to_checkpoint());
    const ForecastModel back = ForecastModel::from_checkpoint(decode_checkpoint(bytes));
    CHECK(encode_checkpoint(back.to_checkpoint()) == bytes);
    CHECK(back.s() == 3);
    CHECK(back.r() == 2);
    const GridField h = g.coarse.frames(0, 4);
    CHECK(back.forecast(h).data() == a.model.forecast(h).data());
}

TEST_CASE("evaluation: persistence scores match a direct computation") {
    const GridField f = ramp(20);
    const WindowedScores s = evaluate_persistence(f, f, WindowRange{0, 5}, 3, 2);
    CHECK(s.rmse_by_lead.size() == 2);
    CHECK(s.rmse_by_lead[0][0] == doctest::Approx(1.0));
    CHECK(s.rmse_by_lead[1][0] == doctest::Approx(2.0));
    CHECK(s.rmse[0] == doctest::Approx(std::sqrt(2.5)));
}
