#include <doctest.h>

#include <cmath>
#include <cstring>

#include "physgrid/errors.hpp"
#include "physgrid/field_net.hpp"
#include "physgrid/rng.hpp"

using namespace physgrid;

namespace {

FieldNet random_net(std::vector<std::size_t> widths, std::uint64_t seed) {
    NormalizationSpec norm = NormalizationSpec::from_box({-2.0, 0.0, 0.0}, {2.0, 3.0, 10.0}, {});
    for (std::size_t k = 0; k < widths.back(); ++k) norm.outputs.push_back({0.3 * static_cast<double>(k), 1.5 + k});
    FieldNet net = FieldNet::init(std::move(widths), seed, NetRole::Surrogate, norm);
    // Nonzero biases so curvature is not symmetric about the origin.
    Rng rng(seed + 1);
    for (std::size_t l = 0; l < net.mlp().layers(); ++l) {
        const std::size_t off = net.mlp().bias_offset(l);
        for (std::size_t j = 0; j < net.mlp().widths()[l + 1]; ++j) net.mlp().params()[off + j] = rng.uniform(-0.5, 0.5);
    }
    return net;
}

double value_at(const FieldNet& net, Coord c, std::size_t k = 0) {
    const Coord one[] = {c};
    return predict(net, one)(0, k);
}

double& axis_ref(Coord& c, int axis) { return axis == 0 ? c.x : axis == 1 ? c.y : c.t; }

}  // namespace

TEST_CASE("init: parameter counts") {
    CHECK(FieldNet::param_count(FieldNet::architecture(8, 100, 8)) == 71908);
    const std::vector<std::size_t> affine{3, 1};
    CHECK(FieldNet::param_count(affine) == 4);
    const FieldNet a = FieldNet::init({3, 1}, 1);
    CHECK(a.param_count() == 4);
    CHECK_THROWS_AS(FieldNet::init({3, 0, 1}, 1), UsageError);
    CHECK_THROWS_AS(FieldNet::init({2, 4, 1}, 1), UsageError);
}

TEST_CASE("init: deterministic, zero biases, latent-force output starts at zero") {
    const FieldNet a = FieldNet::init({3, 20, 20, 2}, 77);
    const FieldNet b = FieldNet::init({3, 20, 20, 2}, 77);
    CHECK(std::memcmp(a.mlp().params().data(), b.mlp().params().data(), a.param_count() * sizeof(double)) == 0);
    const FieldNet c = FieldNet::init({3, 20, 20, 2}, 78);
    CHECK(a.mlp().params() != c.mlp().params());
    const Tensor bias = a.mlp().bias(1);
    for (double v : bias.storage()) CHECK(v == 0.0);

    const FieldNet q = FieldNet::init({3, 20, 20, 1}, 5, NetRole::LatentForce);
    const Coord pts[] = {{0.1, -0.4, 0.7}, {0.9, 0.9, -0.2}};
    const Tensor out = predict(q, pts);
    for (double v : out.storage()) CHECK(v == 0.0);
}

TEST_CASE("predict: zero-weight net returns the output mean") {
    FieldNet net = FieldNet::init({3, 5, 2}, 3);
    std::fill(net.mlp().params().begin(), net.mlp().params().end(), 0.0);
    NormalizationSpec norm = NormalizationSpec::identity(2);
    norm.outputs = {{280.0, 5.0}, {-1.5, 0.1}};
    net.set_normalization(norm);
    const Coord pts[] = {{0.0, 0.0, 0.0}, {0.5, -0.5, 0.9}};
    const Tensor out = predict(net, pts);
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(out(r, 0) == 280.0);
        CHECK(out(r, 1) == -1.5);
    }
}

TEST_CASE("predict: batching is pure") {
    const FieldNet net = random_net({3, 16, 16, 2}, 9);
    Rng rng(1);
    std::vector<Coord> pts;
    for (int i = 0; i < 37; ++i) pts.push_back({rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(0, 10)});
    const Tensor all = predict(net, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Coord one[] = {pts[i]};
        const Tensor single = predict(net, one);
        CHECK(single(0, 0) == doctest::Approx(all(i, 0)).epsilon(1e-14));
        CHECK(single(0, 1) == doctest::Approx(all(i, 1)).epsilon(1e-14));
    }
}

TEST_CASE("predict: extrapolation is flagged") {
    const FieldNet net = random_net({3, 4, 1}, 2);
    const Coord pts[] = {{0.0, 1.0, 5.0}, {2.0, 3.0, 10.0}, {2.5, 1.0, 5.0}, {0.0, 1.0, -0.1}};
    std::vector<std::uint8_t> flags;
    predict(net, pts, &flags);
    CHECK(flags == std::vector<std::uint8_t>{0, 0, 1, 1});
}

TEST_CASE("normalization: round trip and validation") {
    const NormalizationSpec n = NormalizationSpec::from_box({-7.0, 3.0, 100.0}, {13.0, 4.5, 250.0}, {{1.0, 2.0}});
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const Coord c{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0, 400)};
        const Coord back = n.denormalize(n.normalize(c));
        CHECK(std::abs(back.x - c.x) <= 1e-12 * std::max(1.0, std::abs(c.x)));
        CHECK(std::abs(back.y - c.y) <= 1e-12 * std::max(1.0, std::abs(c.y)));
        CHECK(std::abs(back.t - c.t) <= 1e-12 * std::max(1.0, std::abs(c.t)));
    }
    const Coord lo = n.normalize({-7.0, 3.0, 100.0}), hi = n.normalize({13.0, 4.5, 250.0});
    CHECK(lo.x == -1.0);
    CHECK(hi.t == 1.0);
    NormalizationSpec bad = n;
    bad.outputs[0].scale = 0.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("second partials: cubic encoded through the tanh series") {
    // w2 * tanh(eps * x) = w2 * (eps x - (eps x)^3 / 3 + ...); with w2 = -3 / eps^3
    // the curvature is 6x up to O(eps^2).
    const double eps = 1e-4;
    Mlp mlp({3, 1, 1}, std::vector<double>{eps, 0.0, 0.0, 0.0, -3.0 / (eps * eps * eps), 0.0});
    const FieldNet net(mlp, NetRole::Surrogate, NormalizationSpec::identity(1));
    CHECK(second_partial(net, {2.0, 0.0, 0.0}, 0, 0)[0] == doctest::Approx(12.0).epsilon(1e-6));
    CHECK(std::abs(second_partial(net, {2.0, 0.0, 0.0}, 1, 1)[0]) <= 1e-8);
}

TEST_CASE("second partials: affine net has none") {
    const FieldNet net = random_net({3, 2}, 8);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (double v : second_partial(net, {0.3, 1.2, 4.0}, i, j)) CHECK(std::abs(v) <= 1e-8);
        }
    }
    const Coord pts[] = {{0.3, 1.2, 4.0}, {-1.0, 2.0, 9.0}};
    JetRequest req = default_bundle_request();
    req.add(Partial::XY).add(Partial::TT);
    const DerivativeBundle b = derivative_bundle(net, pts, req);
    for (Partial p : {Partial::XX, Partial::YY, Partial::XY, Partial::TT}) {
        for (double v : b.at(p).storage()) CHECK(std::abs(v) <= 1e-8);
    }
}

TEST_CASE("second partials: match central second differences") {
    const FieldNet net = random_net({3, 12, 12, 2}, 21);
    Rng rng(12);
    const double h = 1e-3;
    for (int trial = 0; trial < 10; ++trial) {
        const Coord c{rng.uniform(-1.5, 1.5), rng.uniform(0.5, 2.5), rng.uniform(1, 9)};
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                const std::vector<double> ad = second_partial(net, c, i, j);
                for (std::size_t k = 0; k < 2; ++k) {
                    double fd;
                    if (i == j) {
                        Coord p = c, m = c;
                        axis_ref(p, i) += h;
                        axis_ref(m, i) -= h;
                        fd = (value_at(net, p, k) - 2 * value_at(net, c, k) + value_at(net, m, k)) / (h * h);
                    } else {
                        Coord pp = c, pm = c, mp = c, mm = c;
                        axis_ref(pp, i) += h, axis_ref(pp, j) += h;
                        axis_ref(pm, i) += h, axis_ref(pm, j) -= h;
                        axis_ref(mp, i) -= h, axis_ref(mp, j) += h;
                        axis_ref(mm, i) -= h, axis_ref(mm, j) -= h;
                        fd = (value_at(net, pp, k) - value_at(net, pm, k) - value_at(net, mp, k) + value_at(net, mm, k)) /
                             (4 * h * h);
                    }
                    CHECK(std::abs(ad[k] - fd) <= 1e-3 * std::max(std::abs(fd), 1e-1));
                }
            }
        }
    }
}

TEST_CASE("second partials: mixed partials are symmetric") {
    const FieldNet net = random_net({3, 16, 16, 16, 1}, 31);
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Coord c{rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(0, 10)};
        for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
            CHECK(std::abs(second_partial(net, c, i, j)[0] - second_partial(net, c, j, i)[0]) <= 1e-8);
        }
    }
    CHECK_THROWS_AS(second_partial(net, {0, 0, 0}, 3, 0), UsageError);
    CHECK_THROWS_AS(second_partial(net, {0, 0, 0}, 0, -1), UsageError);
}

TEST_CASE("derivative bundle agrees with the separate routes") {
    const FieldNet net = random_net({3, 10, 10, 2}, 41);
    Rng rng(14);
    std::vector<Coord> pts;
    for (int i = 0; i < 600; ++i) pts.push_back({rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(0, 10)});
    JetRequest req = default_bundle_request();
    req.add(Partial::XY).add(Partial::TT);
    const DerivativeBundle b = derivative_bundle(net, pts, req);
    const Tensor values = predict(net, pts);
    for (std::size_t i = 0; i < pts.size(); i += 37) {
        const Tensor g = input_gradient(net, pts[i]);
        const auto xx = second_partial(net, pts[i], 0, 0), yy = second_partial(net, pts[i], 1, 1);
        const auto tt = second_partial(net, pts[i], 2, 2), xy = second_partial(net, pts[i], 0, 1);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs(b(Partial::Value, i, k) - values(i, k)) <= 1e-12);
            CHECK(std::abs(b(Partial::X, i, k) - g(k, 0)) <= 1e-12);
            CHECK(std::abs(b(Partial::Y, i, k) - g(k, 1)) <= 1e-12);
            CHECK(std::abs(b(Partial::T, i, k) - g(k, 2)) <= 1e-12);
            CHECK(std::abs(b(Partial::XX, i, k) - xx[k]) <= 1e-12);
            CHECK(std::abs(b(Partial::YY, i, k) - yy[k]) <= 1e-12);
            CHECK(std::abs(b(Partial::TT, i, k) - tt[k]) <= 1e-12);
            CHECK(std::abs(b(Partial::XY, i, k) - xy[k]) <= 1e-12);
        }
    }
}

TEST_CASE("derivative bundle: chain rule through the coordinate scale") {
    FieldNet net = random_net({3, 8, 1}, 51);
    NormalizationSpec wide = net.normalization();
    const Coord c{0.4, 1.1, 3.0};
    const Coord pts[] = {c};
    const DerivativeBundle b1 = derivative_bundle(net, pts);
    // Same underlying network seen through an x axis twice as long, queried
    // at the same normalized position.
    const double n = wide.axes[0].forward(c.x);
    wide.axes[0].scale *= 2.0;
    net.set_normalization(wide);
    const Coord pts2[] = {{wide.axes[0].inverse(n), c.y, c.t}};
    const DerivativeBundle b2 = derivative_bundle(net, pts2);
    CHECK(b2(Partial::Value, 0, 0) == doctest::Approx(b1(Partial::Value, 0, 0)).epsilon(1e-12));
    CHECK(b2(Partial::X, 0, 0) == doctest::Approx(0.5 * b1(Partial::X, 0, 0)).epsilon(1e-12));
    CHECK(b2(Partial::XX, 0, 0) == doctest::Approx(0.25 * b1(Partial::XX, 0, 0)).epsilon(1e-12));
    CHECK(b2(Partial::T, 0, 0) == doctest::Approx(b1(Partial::T, 0, 0)).epsilon(1e-12));
}
