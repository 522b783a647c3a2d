#include <doctest.h>

#include <limits>

#include "test_util.hpp"
#include "xq/leaf.hpp"
#include "xq/product.hpp"

using namespace xq;
using namespace xq::test;

TEST_CASE("split basics") {
    Rng rng(41);
    FeatureGrid g = random_grid(rng, 2, 2, 4);
    auto parts = pq_split(g, ProductConfig::equal_split(4, 2));
    REQUIRE(parts.size() == 2);
    for (int pos = 0; pos < g.positions(); ++pos) {
        CHECK(parts[0].vector(pos)[0] == g.vector(pos)[0]);
        CHECK(parts[0].vector(pos)[1] == g.vector(pos)[1]);
        CHECK(parts[1].vector(pos)[0] == g.vector(pos)[2]);
        CHECK(parts[1].vector(pos)[1] == g.vector(pos)[3]);
    }

    auto one = pq_split(g, ProductConfig::equal_split(4, 1));
    CHECK(bitwise_equal(one[0], g));
}

TEST_CASE("split then join is the identity") {
    Rng rng(42);
    FeatureGrid g = random_grid(rng, 3, 5, 6);
    for (int p : {1, 2, 3, 6}) {
        auto parts = pq_split(g, ProductConfig::equal_split(6, p));
        CHECK(bitwise_equal(pq_join(parts), g));
    }
    // Unequal split.
    auto parts = pq_split(g, ProductConfig{{1, 2, 3}});
    CHECK(bitwise_equal(pq_join(parts), g));
}

TEST_CASE("indivisible equal split is an error") {
    CHECK_THROWS_AS(ProductConfig::equal_split(5, 2), ConfigError);
    Rng rng(43);
    FeatureGrid g = random_grid(rng, 1, 1, 4);
    CHECK_THROWS_AS(pq_split(g, ProductConfig{{1, 2}}), ShapeError);
}

TEST_CASE("branch errors add up") {
    Rng rng(44);
    Codebook a = random_codebook(rng, 5, 2);
    Codebook b = random_codebook(rng, 7, 2);
    FeatureGrid g = random_grid(rng, 2, 2, 4);
    ProductConfig cfg = ProductConfig::equal_split(4, 2);
    std::vector<const Codebook*> cbs = {&a, &b};
    ProductQuantResult r = pq_quantize(
            g, cfg, [&](int branch, const FeatureGrid& part) {
                GridQuantResult q =
                        leaf_quantize_grid(part, LeafKind::VQ, cbs[branch]);
                return BranchQuantResult{std::move(q.quantized),
                                         q.total_sq_error};
            });
    CHECK(std::abs(r.total_sq_error -
                   (r.branch_sq_errors[0] + r.branch_sq_errors[1])) <= 1e-12);
    // Pythagorean split over disjoint channels.
    double direct = 0.0;
    for (size_t i = 0; i < g.data().size(); ++i) {
        double d = g.data()[i] - r.quantized.data()[i];
        direct += d * d;
    }
    CHECK(r.total_sq_error == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("branch evaluation order does not matter") {
    Rng rng(45);
    Codebook a = random_codebook(rng, 4, 2);
    Codebook b = random_codebook(rng, 4, 2);
    FeatureGrid g = random_grid(rng, 2, 2, 4);
    ProductConfig cfg = ProductConfig::equal_split(4, 2);
    auto parts = pq_split(g, cfg);

    auto quantize = [&](const FeatureGrid& part, const Codebook& cb) {
        return leaf_quantize_grid(part, LeafKind::VQ, &cb).quantized;
    };
    // Forward order.
    FeatureGrid q0 = quantize(parts[0], a);
    FeatureGrid q1 = quantize(parts[1], b);
    FeatureGrid forward = pq_join({q0, q1});
    // Reverse order.
    FeatureGrid r1 = quantize(parts[1], b);
    FeatureGrid r0 = quantize(parts[0], a);
    FeatureGrid reverse = pq_join({r0, r1});
    CHECK(bitwise_equal(forward, reverse));
}

TEST_CASE("pq with vq leaves equals the cartesian product codebook") {
    Rng rng(46);
    for (int trial = 0; trial < 20; ++trial) {
        int ja = 2 + static_cast<int>(rng.uniform_int(0, 6));
        int jb = 2 + static_cast<int>(rng.uniform_int(0, 6));
        Codebook a = random_codebook(rng, ja, 2);
        Codebook b = random_codebook(rng, jb, 2);
        // Product codebook, branch 0 major.
        std::vector<double> prod;
        for (int i = 0; i < ja; ++i) {
            for (int j = 0; j < jb; ++j) {
                prod.insert(prod.end(), a.entry(i).begin(), a.entry(i).end());
                prod.insert(prod.end(), b.entry(j).begin(), b.entry(j).end());
            }
        }
        Codebook product(ja * jb, 4, std::move(prod));

        FeatureGrid g = random_grid(rng, 2, 2, 4);
        ProductConfig cfg = ProductConfig::equal_split(4, 2);
        auto parts = pq_split(g, cfg);
        for (int pos = 0; pos < g.positions(); ++pos) {
            QuantizedVector qa = vq_quantize(parts[0].vector(pos), a);
            QuantizedVector qb = vq_quantize(parts[1].vector(pos), b);
            QuantizedVector full = vq_quantize(g.vector(pos), product);
            CHECK(full.code == qa.code * static_cast<uint32_t>(jb) + qb.code);
            for (int c = 0; c < 2; ++c) {
                CHECK(full.vector[c] == qa.vector[c]);
                CHECK(full.vector[2 + c] == qb.vector[c]);
            }
        }
    }
}
