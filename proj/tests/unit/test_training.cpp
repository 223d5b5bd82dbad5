#include <doctest.h>

#include <cmath>
#include <cstring>

#include "physgrid/checkpoint.hpp"
#include "physgrid/errors.hpp"
#include "physgrid/synthetic.hpp"
#include "physgrid/training.hpp"

using namespace physgrid;

namespace {

FieldNet zero_net(std::size_t outputs) {
    FieldNet net = FieldNet::init({3, outputs}, 1, NetRole::Surrogate, NormalizationSpec::identity(outputs));
    std::fill(net.mlp().params().begin(), net.mlp().params().end(), 0.0);
    return net;
}

GridField small_field(std::uint64_t seed, std::size_t nt = 20) {
    SyntheticCase c = SyntheticCase::defaults(CaseId::Advection2D);
    c.nx = c.ny = 8;
    c.nt = nt;
    c.seed = seed;
    return generate(c).coarse;
}

TrainConfig small_config() {
    TrainConfig tc;
    tc.hidden_layers = 2;
    tc.hidden_width = 16;
    tc.force_hidden_layers = 2;
    tc.force_hidden_width = 8;
    tc.batch_size = 128;
    tc.collocation_batch = 64;
    tc.learning_rate = 1e-3;
    tc.epochs = 5;
    tc.warmup_epochs = 1;
    tc.refit_period = 2;
    tc.refit_points = 400;
    tc.alpha = 0.1;
    tc.sigma_theta = 1e-5;
    tc.sigma_pi = 1e-5;
    tc.seed = 3;
    return tc;
}

bool same_bits(const Buffer& a, const Buffer& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("data loss: definition examples") {
    const FieldNet net = zero_net(1);
    DataBatch b{{Coord{0, 0, 0}, Coord{1, 1, 1}}, {1.0, 2.0}};
    CHECK(data_loss(net, b) == doctest::Approx(2.5));
    b.values = {0.0, 0.0};
    CHECK(data_loss(net, b) == 0.0);
    const FieldNet two = zero_net(2);
    const DataBatch ones{{Coord{0, 0, 0}, Coord{0.5, 0, 0}, Coord{0, 0.5, 1}}, std::vector<double>(6, 1.0)};
    CHECK(data_loss(two, ones) == doctest::Approx(1.0));
    CHECK_THROWS_AS(data_loss(net, DataBatch{}), UsageError);
}

TEST_CASE("physics loss: static field with zero system is zero") {
    FieldNet net = FieldNet::init({3, 1}, 1, NetRole::Surrogate, NormalizationSpec::identity(1));
    // output = 0.3 x - 0.2 y + 0.1, no t dependence
    net.mlp().params() = Buffer{0.3, -0.2, 0.0, 0.1};
    const EquationSystem sys = default_system({"u"}, {EquationConfig{"u", 1, std::nullopt, false}});
    const std::vector<Coord> pts{{0.1, 0.2, 0.3}, {-0.5, 0.4, 0.9}};
    CHECK(physics_loss(net, nullptr, sys, pts) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("train: loss decomposition, best-validation selection, refit schedule") {
    TrainConfig tc = small_config();
    tc.equations = {EquationConfig{"u", 1, std::nullopt, true}};
    const TrainResult r = train(small_field(1), tc);
    REQUIRE(r.history.size() == tc.epochs);
    CHECK(!r.aborted);
    CHECK(r.latent_force.has_value());
    for (const EpochRecord& e : r.history) {
        const double sum = e.data_loss + tc.alpha * e.physics_loss + e.regularization;
        CHECK(std::abs(e.total - sum) <= 1e-12 * std::max(1.0, std::abs(e.total)));
        CHECK(r.best_validation_loss <= e.validation_loss);
        CHECK(e.seconds >= 0.0);
    }
    CHECK(r.history[r.best_epoch].validation_loss == r.best_validation_loss);
    CHECK(r.history[0].xi_snapshot == -1);
    CHECK(r.history[0].physics_loss == 0.0);
    CHECK(r.history[1].xi_snapshot == 0);
    CHECK(r.history[1].physics_loss > 0.0);
    CHECK(r.history[3].xi_snapshot == 1);
    const std::string csv = r.history_csv();
    CHECK(csv.rfind("epoch,data_loss,phys_loss,val_loss,xi_snapshot", 0) == 0);
}

TEST_CASE("train: no warmup fits Xi before the first epoch") {
    TrainConfig tc = small_config();
    tc.warmup_epochs = 0;
    tc.epochs = 1;
    const TrainResult r = train(small_field(2), tc);
    CHECK(r.history[0].xi_snapshot == 0);
    CHECK(r.history[0].physics_loss > 0.0);
}

TEST_CASE("train: fixed seed is bit-reproducible") {
    const GridField f = small_field(4);
    TrainConfig tc = small_config();
    tc.epochs = 3;
    const TrainResult a = train(f, tc), b = train(f, tc);
    CHECK(a.history_csv() == b.history_csv());
    CHECK(same_bits(a.surrogate.mlp().params(), b.surrogate.mlp().params()));
    CHECK(encode_checkpoint(to_checkpoint(a.surrogate, {"u"})) == encode_checkpoint(to_checkpoint(b.surrogate, {"u"})));
    CHECK(a.system.to_json() == b.system.to_json());
    tc.seed = 4;
    CHECK(train(f, tc).history_csv() != a.history_csv());
}

TEST_CASE("train: config validation") {
    TrainConfig tc;
    tc.epochs = 0;
    CHECK_THROWS_AS(tc.validate(), UsageError);
    tc = TrainConfig{};
    tc.alpha = -1;
    CHECK_THROWS_AS(tc.validate(), UsageError);
    const nlohmann::json j = TrainConfig{}.to_json();
    CHECK(j["alpha"] == 10.0);
    CHECK(j["learning_rate"] == 1e-4);
    CHECK(j["batch_size"] == 10000);
}

TEST_CASE("downscale: factor 1 equals predict, factor 2 grid arithmetic") {
    const GridField f = small_field(5, 12);
    FieldNet net = FieldNet::init({3, 8, 1}, 2, NetRole::Surrogate,
                                  NormalizationSpec::from_box(f.lo(), f.hi(), {Affine{0.1, 2.0}}));
    const GridField one = downscale(net, f, 1);
    const Tensor p = predict(net, grid_coords(f));
    for (std::size_t i = 0; i < f.points(); ++i) CHECK(one.data()[i] == p(i, 0));
    const GridField two = downscale(net, f, 2);
    CHECK(two.nx() == 2 * f.nx() - 1);
    CHECK(two.ny() == 2 * f.ny() - 1);
    CHECK(two.nt() == f.nt());
    CHECK(two.axes().dx == doctest::Approx(f.axes().dx / 2));
    CHECK(two.hi().x == doctest::Approx(f.hi().x));
    CHECK_THROWS_AS(downscale(net, f, 0), UsageError);
}

TEST_CASE("checkpoint: round trip and corruption") {
    const FieldNet net = FieldNet::init({3, 5, 2}, 9, NetRole::LatentForce,
                                        NormalizationSpec::from_box({0, 0, 0}, {1, 2, 3}, {Affine{1, 2}, Affine{-1, 0.5}}));
    const Checkpoint c = to_checkpoint(net, {"a", "b"}, {0.5});
    const auto bytes = encode_checkpoint(c);
    const Checkpoint d = decode_checkpoint(bytes);
    CHECK(encode_checkpoint(d) == bytes);
    const FieldNet back = to_field_net(d);
    CHECK(back.role() == NetRole::LatentForce);
    CHECK(same_bits(back.mlp().params(), net.mlp().params()));
    CHECK(d.names == std::vector<std::string>{"a", "b"});
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 3);
    CHECK_THROWS_AS(decode_checkpoint(cut), TruncatedError);
    auto magic = bytes;
    magic[1] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), BadMagicError);
    auto version = bytes;
    version[5] = 7;
    CHECK_THROWS_AS(decode_checkpoint(version), BadVersionError);
}
