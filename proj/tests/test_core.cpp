#include <doctest.h>

#include "test_util.hpp"
#include "xq/core.hpp"

using namespace xq;
using namespace xq::test;

TEST_CASE("grid_subtract basics") {
    FeatureGrid a(1, 1, 2, {1.0, 2.0});
    FeatureGrid b(1, 1, 2, {0.5, 0.5});
    FeatureGrid d = grid_subtract(a, b);
    CHECK(d.data()[0] == 0.5);
    CHECK(d.data()[1] == 1.5);

    FeatureGrid z = grid_subtract(a, a);
    for (double v : z.data()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("grid_subtract matches a scalar loop") {
    Rng rng(11);
    FeatureGrid a = random_grid(rng, 3, 5, 4);
    FeatureGrid b = random_grid(rng, 3, 5, 4);
    FeatureGrid d = grid_subtract(a, b);
    for (size_t i = 0; i < a.data().size(); ++i) {
        CHECK(d.data()[i] == a.data()[i] - b.data()[i]);
    }
}

TEST_CASE("grid_subtract rejects shape mismatch") {
    FeatureGrid a(1, 2, 2);
    FeatureGrid b(2, 1, 2);
    CHECK_THROWS_AS(grid_subtract(a, b), ShapeError);
    CHECK_THROWS_AS(mse(a, b), ShapeError);
}

TEST_CASE("mse basics and oracle") {
    FeatureGrid a(1, 1, 2, {1.0, 1.0});
    FeatureGrid b(1, 1, 2, {0.0, 0.0});
    CHECK(mse(a, b) == 1.0);
    CHECK(mse(a, a) == 0.0);

    Rng rng(12);
    FeatureGrid x = random_grid(rng, 4, 4, 3);
    FeatureGrid y = random_grid(rng, 4, 4, 3);
    double acc = 0.0;
    for (size_t i = 0; i < x.data().size(); ++i) {
        double d = x.data()[i] - y.data()[i];
        acc += d * d;
    }
    CHECK(mse(x, y) == doctest::Approx(acc / x.data().size()).epsilon(1e-14));
    CHECK(mse(x, y) == mse(y, x));
    CHECK(mse(x, y) >= 0.0);
}

TEST_CASE("subtract involution within 1e-12") {
    Rng rng(13);
    FeatureGrid a = random_grid(rng, 2, 2, 3, -10.0, 10.0);
    FeatureGrid b = random_grid(rng, 2, 2, 3, -10.0, 10.0);
    FeatureGrid back = grid_subtract(a, grid_subtract(a, b));
    for (size_t i = 0; i < b.data().size(); ++i) {
        CHECK(std::abs(back.data()[i] - b.data()[i]) <= 1e-12);
    }
}

TEST_CASE("equal seeds give bit-identical rng streams") {
    Rng a(999);
    Rng b(999);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(999);
    Rng d(1000);
    bool differs = false;
    for (int i = 0; i < 10; ++i) {
        differs |= c.next_u64() != d.next_u64();
    }
    CHECK(differs);
}

TEST_CASE("grid construction validates") {
    CHECK_THROWS_AS(FeatureGrid(0, 1, 1), ValueError);
    CHECK_THROWS_AS(FeatureGrid(1, 1, 2, {1.0}), ShapeError);
    FeatureGrid g(1, 1, 1, {std::nan("")});
    CHECK_THROWS_AS(g.check_finite(), ValueError);
}
