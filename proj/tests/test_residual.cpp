#include <doctest.h>

#include <map>

#include "test_util.hpp"
#include "xq/residual.hpp"

using namespace xq;
using namespace xq::test;

namespace {

ResidualConfig vq_config(int steps, const Codebook* cb, double ratio = 0.0,
                         int start = 1) {
    ResidualConfig cfg;
    cfg.steps = steps;
    cfg.dropout.ratio = ratio;
    cfg.dropout.start = start;
    cfg.leaf = LeafKind::VQ;
    cfg.codebook = cb;
    return cfg;
}

}  // namespace

TEST_CASE("single-step rq equals plain grid quantization") {
    Rng rng(31);
    Codebook cb = random_codebook(rng, 8, 3);
    FeatureGrid g = random_grid(rng, 3, 3, 3);
    ResidualTrace t = rq_encode(g, vq_config(1, &cb), false, rng);
    GridQuantResult r = leaf_quantize_grid(g, LeafKind::VQ, &cb);
    CHECK(t.active_steps == 1);
    CHECK(bitwise_equal(t.quantized[0], r.quantized));
    CHECK(t.codes[0].codes == r.codes.codes);
}

TEST_CASE("two-step refinement picks successive nearest codewords") {
    Codebook cb(3, 2, {0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
    FeatureGrid g(1, 1, 2, {1.4, 0.6});
    Rng rng(32);
    ResidualTrace t = rq_encode(g, vq_config(2, &cb), false, rng);
    CHECK(t.codes[0].codes[0] == 1);  // (1,0)
    CHECK(t.codes[1].codes[0] == 2);  // (0,1)
    FeatureGrid sum = rq_sum(t);
    CHECK(sum.data()[0] == 1.0);
    CHECK(sum.data()[1] == 1.0);
}

TEST_CASE("p=0 never truncates") {
    Rng rng(33);
    Codebook cb = random_codebook(rng, 4, 2);
    ResidualConfig cfg = vq_config(5, &cb, 0.0, 2);
    for (int i = 0; i < 100; ++i) {
        CHECK(draw_active_steps(cfg, true, rng) == 5);
    }
}

TEST_CASE("dropout draws cover the configured range") {
    Rng rng(34);
    Codebook cb = random_codebook(rng, 4, 2);
    ResidualConfig cfg = vq_config(6, &cb, 1.0, 3);
    std::map<int, int> seen;
    for (int i = 0; i < 4000; ++i) {
        ++seen[draw_active_steps(cfg, true, rng)];
    }
    CHECK(seen.size() == 4);  // {3,4,5,6}
    for (int n = 3; n <= 6; ++n) {
        CHECK(seen.count(n) == 1);
    }
}

TEST_CASE("inference ignores the rng") {
    Rng r1(1);
    Rng r2(99999);
    Codebook cb = random_codebook(r1, 8, 2);
    FeatureGrid g = random_grid(r1, 4, 4, 2);
    ResidualConfig cfg = vq_config(4, &cb, 1.0, 2);
    ResidualTrace a = rq_encode(g, cfg, false, r1);
    ResidualTrace b = rq_encode(g, cfg, false, r2);
    CHECK(a.active_steps == 4);
    CHECK(b.active_steps == 4);
    CHECK(bitwise_equal(rq_sum(a), rq_sum(b)));
}

TEST_CASE("residual identity") {
    Rng rng(35);
    Codebook cb = random_codebook(rng, 8, 3);
    FeatureGrid g = random_grid(rng, 4, 4, 3);
    ResidualTrace t = rq_encode(g, vq_config(5, &cb), false, rng);
    FeatureGrid approx = rq_sum(t);
    // g - sum(z') must equal the final residual.
    FeatureGrid residual = g;
    for (const FeatureGrid& step : t.quantized) {
        residual = grid_subtract(residual, step);
    }
    FeatureGrid diff = grid_subtract(g, approx);
    for (size_t i = 0; i < diff.data().size(); ++i) {
        CHECK(std::abs(diff.data()[i] - residual.data()[i]) <= 1e-9);
    }
}

TEST_CASE("zero-augmented codebooks refine monotonically") {
    Rng rng(36);
    for (int trial = 0; trial < 20; ++trial) {
        Codebook cb = zero_augmented_codebook(rng, 9, 3);
        FeatureGrid g = random_grid(rng, 3, 3, 3);
        ResidualTrace t = rq_encode(g, vq_config(6, &cb), false, rng);
        FeatureGrid partial(3, 3, 3);
        std::vector<double> prev(g.positions());
        for (int pos = 0; pos < g.positions(); ++pos) {
            prev[pos] = sq_dist(g.vector(pos), partial.vector(pos));
        }
        for (const FeatureGrid& step : t.quantized) {
            partial = grid_add(partial, step);
            for (int pos = 0; pos < g.positions(); ++pos) {
                double err = sq_dist(g.vector(pos), partial.vector(pos));
                CHECK(err <= prev[pos] + 1e-12);
                prev[pos] = err;
            }
        }
    }
}

TEST_CASE("decode reproduces the encode sum bitwise") {
    Rng rng(37);
    Codebook cb = random_codebook(rng, 16, 4);
    FeatureGrid g = random_grid(rng, 4, 4, 4);
    ResidualConfig cfg = vq_config(4, &cb);
    ResidualTrace t = rq_encode(g, cfg, false, rng);
    FeatureGrid decoded = rq_decode(t.codes, cfg, 4);
    CHECK(bitwise_equal(decoded, rq_sum(t)));

    // Independent re-summation loop.
    for (int pos = 0; pos < g.positions(); ++pos) {
        for (int c = 0; c < 4; ++c) {
            double acc = 0.0;
            for (const CodeGrid& step : t.codes) {
                acc += cb.entry(static_cast<int>(step.codes[pos]))[c];
            }
            CHECK(decoded.vector(pos)[c] == doctest::Approx(acc).epsilon(1e-14));
        }
    }
}

TEST_CASE("truncated code lists decode with fewer steps") {
    Rng rng(38);
    Codebook cb = random_codebook(rng, 8, 2);
    FeatureGrid g = random_grid(rng, 2, 2, 2);
    ResidualConfig cfg = vq_config(4, &cb);
    ResidualTrace t = rq_encode(g, cfg, false, rng);
    std::vector<CodeGrid> two(t.codes.begin(), t.codes.begin() + 2);
    FeatureGrid partial = rq_decode(two, cfg, 2);
    CHECK(bitwise_equal(partial, grid_add(t.quantized[0], t.quantized[1])));
}

TEST_CASE("decode rejects out-of-range codes") {
    Codebook cb(2, 1, {0.0, 1.0});
    ResidualConfig cfg = vq_config(1, &cb);
    CodeGrid bad{1, 1, {7}};
    CHECK_THROWS_AS(rq_decode({bad}, cfg, 1), ValueError);
}

TEST_CASE("config validation") {
    Codebook cb(2, 2, {0.0, 0.0, 1.0, 1.0});
    FeatureGrid g(1, 1, 3, {0.0, 0.0, 0.0});
    Rng rng(39);
    CHECK_THROWS_AS(rq_encode(g, vq_config(2, &cb), false, rng), ShapeError);
    ResidualConfig bad = vq_config(2, &cb, 0.5, 3);  // start > steps
    FeatureGrid ok(1, 1, 2, {0.0, 0.0});
    CHECK_THROWS_AS(rq_encode(ok, bad, false, rng), ConfigError);
}

TEST_CASE("rq_sum edge cases") {
    ResidualTrace empty;
    CHECK_THROWS_AS(rq_sum(empty), ValueError);

    ResidualTrace zeros;
    zeros.quantized.push_back(FeatureGrid(2, 2, 1));
    zeros.quantized.push_back(FeatureGrid(2, 2, 1));
    zeros.active_steps = 2;
    FeatureGrid summed = rq_sum(zeros);
    for (double v : summed.data()) {
        CHECK(v == 0.0);
    }
}
