#include "xq/hierarchy.hpp"

#include <algorithm>
#include <charconv>

namespace xq {

namespace {

constexpr double kCommitmentBeta = 0.25;

std::vector<std::string> split_tokens(const std::string& name) {
    std::vector<std::string> tokens;
    size_t start = 0;
    while (start <= name.size()) {
        size_t dash = name.find('-', start);
        if (dash == std::string::npos) {
            tokens.push_back(name.substr(start));
            break;
        }
        tokens.push_back(name.substr(start, dash - start));
        start = dash + 1;
    }
    return tokens;
}

[[noreturn]] void bad_token(size_t index, const std::string& token,
                            const std::string& expected) {
    throw ConfigError("malformed variant name at token " +
                      std::to_string(index) + " (\"" + token + "\"): expected " +
                      expected);
}

bool parse_count(const std::string& token, char prefix, int& out) {
    if (token.size() < 2 || token[0] != prefix) {
        return false;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data() + 1,
                                     token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value < 1) {
        return false;
    }
    out = value;
    return true;
}

}  // namespace

HierarchySpec parse_variant(const std::string& name) {
    std::vector<std::string> tokens = split_tokens(name);
    HierarchySpec spec;
    size_t i = 0;
    if (i >= tokens.size() || tokens[i] != "XQ") {
        bad_token(i, i < tokens.size() ? tokens[i] : "", "\"XQ\"");
    }
    ++i;
    if (i < tokens.size() && tokens[i] == "MS") {
        spec.multiscale = true;
        ++i;
    }
    if (i >= tokens.size()) {
        bad_token(i, "", "leaf letter V, L or B");
    }
    if (tokens[i] == "V") {
        spec.leaf = LeafKind::VQ;
    } else if (tokens[i] == "L") {
        spec.leaf = LeafKind::LFQ;
    } else if (tokens[i] == "B") {
        spec.leaf = LeafKind::BSQ;
    } else {
        bad_token(i, tokens[i], "leaf letter V, L or B");
    }
    ++i;
    if (i < tokens.size() && parse_count(tokens[i], 'R', spec.residual_steps)) {
        ++i;
    }
    if (i < tokens.size() && parse_count(tokens[i], 'P', spec.product_branches)) {
        ++i;
    }
    if (i != tokens.size()) {
        bad_token(i, tokens[i], "end of name");
    }
    return spec;
}

std::string format_variant(const HierarchySpec& spec) {
    std::string name = "XQ";
    if (spec.multiscale) {
        name += "-MS";
    }
    switch (spec.leaf) {
        case LeafKind::VQ:
            name += "-V";
            break;
        case LeafKind::LFQ:
            name += "-L";
            break;
        case LeafKind::BSQ:
            name += "-B";
            break;
    }
    if (spec.residual_steps > 1) {
        name += "-R" + std::to_string(spec.residual_steps);
    }
    if (spec.product_branches > 1) {
        name += "-P" + std::to_string(spec.product_branches);
    }
    return name;
}

ScaleSchedule effective_schedule(const HierarchySpec& spec, int side) {
    if (spec.schedule.steps() == 0) {
        return ScaleSchedule::flat(side, spec.residual_steps);
    }
    if (spec.schedule.steps() != spec.residual_steps) {
        throw ConfigError("schedule length does not match residual steps");
    }
    if (spec.schedule.full_side() != side) {
        throw ConfigError("schedule must end at the grid side " +
                          std::to_string(side));
    }
    return spec.schedule;
}

std::vector<int> branch_dims(const HierarchySpec& spec,
                             const std::vector<Codebook>& codebooks, int dim) {
    const int P = spec.product_branches;
    if (spec.leaf == LeafKind::VQ) {
        if (static_cast<int>(codebooks.size()) != P) {
            throw ConfigError("expected " + std::to_string(P) +
                              " codebooks, got " +
                              std::to_string(codebooks.size()));
        }
        std::vector<int> dims;
        int total = 0;
        for (const Codebook& cb : codebooks) {
            dims.push_back(cb.dim());
            total += cb.dim();
        }
        if (total != dim) {
            throw ConfigError("codebook dims sum to " + std::to_string(total) +
                              " but the grid dim is " + std::to_string(dim));
        }
        return dims;
    }
    if (!codebooks.empty()) {
        throw ConfigError("LFQ/BSQ variants take no codebooks");
    }
    return ProductConfig::equal_split(dim, P).branch_dims;
}

namespace {

ResidualConfig branch_residual_config(const HierarchySpec& spec,
                                      const Codebook* cb) {
    ResidualConfig rc;
    rc.steps = spec.residual_steps;
    rc.dropout = spec.dropout;
    rc.dropout.start = std::min(rc.dropout.start, rc.steps);
    rc.leaf = spec.leaf;
    rc.codebook = cb;
    return rc;
}

uint64_t codes_bits(const HierarchySpec& spec, const ScaleSchedule& schedule,
                    int active_steps, int bits_per_code) {
    uint64_t total = 0;
    for (int i = 0; i < active_steps; ++i) {
        uint64_t s = static_cast<uint64_t>(schedule.side(i));
        total += s * s * static_cast<uint64_t>(bits_per_code);
    }
    return total;
}

}  // namespace

QuantOutcome hier_encode(const FeatureGrid& g, const HierarchySpec& spec,
                         const std::vector<Codebook>& codebooks, bool training,
                         Rng& rng) {
    g.check_finite();
    std::vector<int> dims = branch_dims(spec, codebooks, g.dim());
    ScaleSchedule schedule = effective_schedule(spec, g.height());
    BlendFilter filter = spec.multiscale ? spec.blend_filter
                                         : BlendFilter::identity();

    // One dropout draw shared by every branch.
    ResidualConfig draw_cfg = branch_residual_config(
            spec, spec.leaf == LeafKind::VQ ? &codebooks.front() : nullptr);
    const int n = draw_active_steps(draw_cfg, training, rng);

    ProductConfig pq{dims};
    std::vector<FeatureGrid> parts = pq_split(g, pq);

    QuantOutcome out;
    out.active_steps = n;
    std::vector<FeatureGrid> quantized_parts;
    for (size_t p = 0; p < parts.size(); ++p) {
        const Codebook* cb =
                spec.leaf == LeafKind::VQ ? &codebooks[p] : nullptr;
        ResidualConfig rc = branch_residual_config(spec, cb);
        ResidualTrace trace =
                spec.multiscale
                        ? msrq_encode_fixed(parts[p], schedule, rc, filter, n)
                        : rq_encode_fixed(parts[p], rc, n);
        quantized_parts.push_back(rq_sum(trace));
        BranchCodes bc;
        bc.steps = std::move(trace.codes);
        out.branches.push_back(std::move(bc));
        out.total_bits += codes_bits(spec, schedule, n,
                                     leaf_code_bits(spec.leaf, dims[p], cb));
    }
    out.quantized = pq_join(quantized_parts);
    for (size_t i = 0; i < g.data().size(); ++i) {
        double d = g.data()[i] - out.quantized.data()[i];
        out.total_sq_error += d * d;
    }
    out.recon_mse = mse(g, out.quantized);
    out.vq_loss_value = (1.0 + kCommitmentBeta) * out.recon_mse;
    return out;
}

FeatureGrid hier_decode(const std::vector<BranchCodes>& branches,
                        const HierarchySpec& spec,
                        const std::vector<Codebook>& codebooks, int side,
                        int dim) {
    if (static_cast<int>(branches.size()) != spec.product_branches) {
        throw ShapeError("expected " + std::to_string(spec.product_branches) +
                         " branch code sets, got " +
                         std::to_string(branches.size()));
    }
    std::vector<int> dims = branch_dims(spec, codebooks, dim);
    ScaleSchedule schedule = effective_schedule(spec, side);
    BlendFilter filter = spec.multiscale ? spec.blend_filter
                                         : BlendFilter::identity();
    std::vector<FeatureGrid> parts;
    for (size_t p = 0; p < branches.size(); ++p) {
        const Codebook* cb =
                spec.leaf == LeafKind::VQ ? &codebooks[p] : nullptr;
        ResidualConfig rc = branch_residual_config(spec, cb);
        if (branches[p].steps.empty() ||
            static_cast<int>(branches[p].steps.size()) > rc.steps) {
            throw ShapeError("branch " + std::to_string(p) +
                             " has an invalid residual step count");
        }
        parts.push_back(spec.multiscale
                                ? msrq_decode(branches[p].steps, schedule, rc,
                                              filter, dims[p])
                                : rq_decode(branches[p].steps, rc, dims[p]));
    }
    return pq_join(parts);
}

}  // namespace xq
