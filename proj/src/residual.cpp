#include "xq/residual.hpp"

namespace xq {

void ResidualConfig::validate(int dim) const {
    if (steps < 1) {
        throw ConfigError("residual steps must be >= 1");
    }
    if (dropout.ratio < 0.0 || dropout.ratio > 1.0) {
        throw ConfigError("dropout ratio must lie in [0,1]");
    }
    if (dropout.start < 1 || dropout.start > steps) {
        throw ConfigError("dropout start must lie in [1, steps]");
    }
    if (leaf == LeafKind::VQ) {
        if (codebook == nullptr) {
            throw ConfigError("VQ residual config requires a codebook");
        }
        if (codebook->dim() != dim) {
            throw ShapeError("codebook dim " + std::to_string(codebook->dim()) +
                             " does not match grid dim " + std::to_string(dim));
        }
    } else if (dim < 1 || dim > 32) {
        throw ConfigError("LFQ/BSQ residual dim must lie in [1,32]");
    }
}

int draw_active_steps(const ResidualConfig& cfg, bool training, Rng& rng) {
    if (!training || cfg.dropout.ratio == 0.0) {
        return cfg.steps;
    }
    if (rng.next_double() < cfg.dropout.ratio) {
        return static_cast<int>(rng.uniform_int(
                static_cast<uint64_t>(cfg.dropout.start),
                static_cast<uint64_t>(cfg.steps)));
    }
    return cfg.steps;
}

ResidualTrace rq_encode_fixed(const FeatureGrid& g, const ResidualConfig& cfg,
                              int active_steps) {
    cfg.validate(g.dim());
    if (active_steps < 1 || active_steps > cfg.steps) {
        throw ConfigError("active step count out of range");
    }
    ResidualTrace trace;
    trace.active_steps = active_steps;
    FeatureGrid residual = g;
    for (int i = 0; i < active_steps; ++i) {
        trace.residual_norms.push_back(grid_l2_norm(residual));
        GridQuantResult step = leaf_quantize_grid(
                residual, cfg.leaf,
                cfg.leaf == LeafKind::VQ ? cfg.codebook : nullptr);
        residual = grid_subtract(residual, step.quantized);
        trace.quantized.push_back(std::move(step.quantized));
        trace.codes.push_back(std::move(step.codes));
    }
    return trace;
}

ResidualTrace rq_encode(const FeatureGrid& g, const ResidualConfig& cfg,
                        bool training, Rng& rng) {
    cfg.validate(g.dim());
    return rq_encode_fixed(g, cfg, draw_active_steps(cfg, training, rng));
}

FeatureGrid rq_sum(const ResidualTrace& t) {
    if (t.quantized.empty()) {
        throw ValueError("cannot sum an empty residual trace");
    }
    FeatureGrid acc = t.quantized.front();
    for (size_t i = 1; i < t.quantized.size(); ++i) {
        acc = grid_add(acc, t.quantized[i]);
    }
    return acc;
}

FeatureGrid rq_decode(const std::vector<CodeGrid>& codes,
                      const ResidualConfig& cfg, int dim) {
    cfg.validate(dim);
    if (codes.empty()) {
        throw ValueError("cannot decode an empty code list");
    }
    const Codebook* cb = cfg.leaf == LeafKind::VQ ? cfg.codebook : nullptr;
    FeatureGrid acc;
    for (size_t i = 0; i < codes.size(); ++i) {
        const CodeGrid& step = codes[i];
        if (step.height != codes.front().height ||
            step.width != codes.front().width) {
            throw ShapeError("code grid shape mismatch across residual steps");
        }
        FeatureGrid grid(step.height, step.width, dim);
        for (int pos = 0; pos < step.positions(); ++pos) {
            std::vector<double> v =
                    leaf_lookup(cfg.leaf, dim, cb, step.codes[pos]);
            auto dst = grid.vector(pos);
            std::copy(v.begin(), v.end(), dst.begin());
        }
        acc = i == 0 ? std::move(grid) : grid_add(acc, grid);
    }
    return acc;
}

}  // namespace xq
