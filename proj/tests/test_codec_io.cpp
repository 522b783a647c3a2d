#include <doctest.h>

#include <filesystem>

#include "test_util.hpp"
#include "xq/codec_io.hpp"

using namespace xq;
using namespace xq::test;

namespace {

CodeStream sample_stream(Rng& rng, const HierarchySpec& spec, int side,
                         const std::vector<Codebook>& cbs, int dim) {
    FeatureGrid g = random_grid(rng, side, side, dim, 0.1, 1.0);
    Rng r(0);
    QuantOutcome out = hier_encode(g, spec, cbs, false, r);
    return make_stream(spec, side, out);
}

}  // namespace

TEST_CASE("codebook round trip at float32 precision") {
    Rng rng(81);
    Codebook cb = random_codebook(rng, 12, 5);
    std::string bytes = serialize_codebook(cb);
    CHECK(bytes.size() == 16 + 4 * 12 * 5);
    Codebook back = parse_codebook(bytes);
    CHECK(back.size() == cb.size());
    CHECK(back.dim() == cb.dim());
    for (size_t i = 0; i < cb.entries().size(); ++i) {
        CHECK(back.entries()[i] ==
              static_cast<double>(static_cast<float>(cb.entries()[i])));
    }
    // A second round trip is bit-stable.
    CHECK(serialize_codebook(back) == bytes);
}

TEST_CASE("codebook reader rejects malformed bytes") {
    CHECK_THROWS_WITH_AS(parse_codebook(""),
                         doctest::Contains("offset 0"), FormatError);
    std::string bad = "XQCX";
    bad.resize(16, '\0');
    CHECK_THROWS_WITH_AS(parse_codebook(bad), doctest::Contains("magic"),
                         FormatError);

    Rng rng(82);
    std::string good = serialize_codebook(random_codebook(rng, 3, 2));
    CHECK_THROWS_AS(parse_codebook(good.substr(0, good.size() - 1)),
                    FormatError);
    CHECK_THROWS_AS(parse_codebook(good + "x"), FormatError);
}

TEST_CASE("stream serialization is deterministic") {
    Rng rng(83);
    HierarchySpec spec = parse_variant("XQ-V-R2");
    std::vector<Codebook> cbs = {random_codebook(rng, 8, 3)};
    CodeStream s = sample_stream(rng, spec, 4, cbs, 3);
    CHECK(serialize_stream(s) == serialize_stream(s));
}

TEST_CASE("stream round trip preserves codes exactly") {
    Rng rng(84);
    HierarchySpec spec = parse_variant("XQ-MS-V-R3-P2");
    spec.schedule = ScaleSchedule({1, 2, 4});
    std::vector<Codebook> cbs = {random_codebook(rng, 8, 2),
                                 random_codebook(rng, 8, 2)};
    CodeStream s = sample_stream(rng, spec, 4, cbs, 4);
    CodeStream back = parse_stream(serialize_stream(s));
    CHECK(back.variant == s.variant);
    CHECK(back.side == s.side);
    CHECK(back.schedule == s.schedule);
    CHECK(back.branches == s.branches);
    CHECK(back.active_steps == s.active_steps);
    for (int b = 0; b < s.branches; ++b) {
        for (size_t i = 0; i < s.codes[b].steps.size(); ++i) {
            CHECK(back.codes[b].steps[i].codes == s.codes[b].steps[i].codes);
        }
    }
}

TEST_CASE("dropout-truncated streams decode with n steps") {
    Rng rng(85);
    Codebook cb = random_codebook(rng, 8, 2);
    HierarchySpec spec = parse_variant("XQ-V-R4");
    spec.dropout.ratio = 1.0;
    spec.dropout.start = 2;
    FeatureGrid g = random_grid(rng, 2, 2, 2);
    Rng r(3);
    QuantOutcome out = hier_encode(g, spec, {cb}, true, r);
    CodeStream s = make_stream(spec, 2, out);
    CHECK(s.active_steps == out.active_steps);
    CodeStream back = parse_stream(serialize_stream(s));
    FeatureGrid dec = hier_decode(back.codes, spec, {cb}, 2, 2);
    CHECK(bitwise_equal(dec, out.quantized));
}

TEST_CASE("every truncation of a stream errors cleanly") {
    Rng rng(86);
    HierarchySpec spec = parse_variant("XQ-V-R2");
    std::vector<Codebook> cbs = {random_codebook(rng, 8, 2)};
    std::string bytes = serialize_stream(sample_stream(rng, spec, 3, cbs, 2));
    for (size_t cut = 0; cut < bytes.size(); ++cut) {
        CHECK_THROWS_AS(parse_stream(bytes.substr(0, cut)), FormatError);
    }
}

TEST_CASE("stream reader rejects inconsistent headers") {
    Rng rng(87);
    HierarchySpec spec = parse_variant("XQ-V");
    std::vector<Codebook> cbs = {random_codebook(rng, 4, 2)};
    std::string bytes = serialize_stream(sample_stream(rng, spec, 2, cbs, 2));
    // Corrupt the magic.
    std::string bad = bytes;
    bad[0] = 'Y';
    CHECK_THROWS_AS(parse_stream(bad), FormatError);
    // Corrupt the version.
    bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(parse_stream(bad), FormatError);
}

TEST_CASE("stream_bits hand counts") {
    Rng rng(88);
    // K=2, single scale, P=1, J=16 -> 4 codes x 4 bits.
    HierarchySpec spec = parse_variant("XQ-V");
    std::vector<Codebook> cbs = {random_codebook(rng, 16, 2)};
    CodeStream s = sample_stream(rng, spec, 2, cbs, 2);
    CHECK(stream_bits(s, spec, cbs, 2) == 16);

    // Monotone in n on a fixed schedule.
    HierarchySpec ms = parse_variant("XQ-MS-V-R3");
    ms.schedule = ScaleSchedule({1, 2, 4});
    std::vector<Codebook> mcb = {random_codebook(rng, 8, 2)};
    CodeStream full = sample_stream(rng, ms, 4, mcb, 2);
    uint64_t prev = 0;
    for (uint8_t n = 1; n <= 3; ++n) {
        CodeStream cut = full;
        cut.active_steps = n;
        for (auto& branch : cut.codes) {
            branch.steps.resize(n);
        }
        uint64_t bits = stream_bits(cut, ms, mcb, 2);
        CHECK(bits > prev);
        prev = bits;
    }
}

TEST_CASE("file helpers write atomically") {
    Rng rng(89);
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "xq_codec_test";
    fs::create_directories(dir);
    Codebook cb = random_codebook(rng, 4, 3);
    std::string path = (dir / "cb.xqcb").string();
    write_codebook(path, cb);
    Codebook back = read_codebook(path);
    CHECK(back.size() == 4);
    CHECK(!fs::exists(path + ".tmp"));
    CHECK_THROWS_AS(read_codebook((dir / "missing.xqcb").string()), IoError);
    fs::remove_all(dir);
}
