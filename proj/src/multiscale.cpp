#include "xq/multiscale.hpp"

#include <algorithm>
#include <cmath>

namespace xq {

ScaleSchedule::ScaleSchedule(std::vector<int> sides) : sides_(std::move(sides)) {
    if (sides_.empty()) {
        throw ConfigError("scale schedule must have at least one step");
    }
    for (size_t i = 0; i < sides_.size(); ++i) {
        if (sides_[i] < 1) {
            throw ConfigError("scale schedule entries must be positive");
        }
        if (i > 0 && sides_[i] < sides_[i - 1]) {
            throw ConfigError("scale schedule must be nondecreasing");
        }
    }
}

ScaleSchedule ScaleSchedule::flat(int side, int steps) {
    return ScaleSchedule(std::vector<int>(static_cast<size_t>(steps), side));
}

void BlendFilter::validate() const {
    if (gamma < 0.0 || gamma > 1.0) {
        throw ConfigError("blend gamma must lie in [0,1]");
    }
    if (kernel_side < 1 || kernel_side % 2 == 0) {
        throw ConfigError("blend kernel side must be odd and positive");
    }
    if (kernel.size() != static_cast<size_t>(kernel_side) * kernel_side) {
        throw ShapeError("blend kernel weight count mismatch");
    }
    for (double w : kernel) {
        if (!std::isfinite(w)) {
            throw ValueError("blend kernel weight is not finite");
        }
    }
}

BlendFilter BlendFilter::box(double gamma, int side) {
    BlendFilter f;
    f.gamma = gamma;
    f.kernel_side = side;
    f.kernel.assign(static_cast<size_t>(side) * side,
                    1.0 / (static_cast<double>(side) * side));
    f.validate();
    return f;
}

BlendFilter BlendFilter::identity() {
    BlendFilter f = box(0.0, 1);
    return f;
}

FeatureGrid resample(const FeatureGrid& g, int target_side) {
    if (g.height() != g.width()) {
        throw ShapeError("resample expects a square grid");
    }
    if (target_side < 1) {
        throw ValueError("resample target side must be positive");
    }
    if (target_side == g.height()) {
        return g;
    }
    const int in = g.height();
    const int out = target_side;
    const double scale = static_cast<double>(in) / out;
    std::vector<int> lo(out), hi(out);
    std::vector<double> frac(out);
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        int i0 = static_cast<int>(std::floor(src));
        lo[i] = i0;
        hi[i] = std::min(i0 + 1, in - 1);
        frac[i] = src - i0;
    }
    FeatureGrid result(out, out, g.dim());
    for (int r = 0; r < out; ++r) {
        for (int c = 0; c < out; ++c) {
            auto dst = result.at(r, c);
            auto v00 = g.at(lo[r], lo[c]);
            auto v01 = g.at(lo[r], hi[c]);
            auto v10 = g.at(hi[r], lo[c]);
            auto v11 = g.at(hi[r], hi[c]);
            double fr = frac[r];
            double fc = frac[c];
            for (int ch = 0; ch < g.dim(); ++ch) {
                double top = v00[ch] * (1.0 - fc) + v01[ch] * fc;
                double bot = v10[ch] * (1.0 - fc) + v11[ch] * fc;
                dst[ch] = top * (1.0 - fr) + bot * fr;
            }
        }
    }
    return result;
}

FeatureGrid blend(const FeatureGrid& g, const BlendFilter& f) {
    f.validate();
    if (f.gamma == 0.0) {
        return g;
    }
    const int half = f.kernel_side / 2;
    FeatureGrid result(g.height(), g.width(), g.dim());
    for (int r = 0; r < g.height(); ++r) {
        for (int c = 0; c < g.width(); ++c) {
            auto dst = result.at(r, c);
            auto center = g.at(r, c);
            for (int ch = 0; ch < g.dim(); ++ch) {
                double conv = 0.0;
                for (int kr = 0; kr < f.kernel_side; ++kr) {
                    int rr = r + kr - half;
                    if (rr < 0 || rr >= g.height()) {
                        continue;  // zero padding
                    }
                    for (int kc = 0; kc < f.kernel_side; ++kc) {
                        int cc = c + kc - half;
                        if (cc < 0 || cc >= g.width()) {
                            continue;
                        }
                        conv += f.kernel[kr * f.kernel_side + kc] *
                                g.at(rr, cc)[ch];
                    }
                }
                dst[ch] = f.gamma * conv + (1.0 - f.gamma) * center[ch];
            }
        }
    }
    return result;
}

static void check_schedule(const ScaleSchedule& schedule,
                           const ResidualConfig& cfg, const FeatureGrid& g) {
    if (g.height() != g.width()) {
        throw ShapeError("multi-scale encode expects a square grid");
    }
    if (schedule.steps() != cfg.steps) {
        throw ConfigError("schedule length " +
                          std::to_string(schedule.steps()) +
                          " does not match residual steps " +
                          std::to_string(cfg.steps));
    }
    if (schedule.full_side() != g.height()) {
        throw ConfigError("schedule must end at the grid side " +
                          std::to_string(g.height()));
    }
}

ResidualTrace msrq_encode_fixed(const FeatureGrid& g,
                                const ScaleSchedule& schedule,
                                const ResidualConfig& cfg,
                                const BlendFilter& filter, int active_steps) {
    cfg.validate(g.dim());
    filter.validate();
    check_schedule(schedule, cfg, g);
    if (active_steps < 1 || active_steps > cfg.steps) {
        throw ConfigError("active step count out of range");
    }
    const int full = g.height();
    ResidualTrace trace;
    trace.active_steps = active_steps;
    FeatureGrid residual = g;
    for (int i = 0; i < active_steps; ++i) {
        trace.residual_norms.push_back(grid_l2_norm(residual));
        FeatureGrid down = resample(residual, schedule.side(i));
        GridQuantResult step = leaf_quantize_grid(
                down, cfg.leaf,
                cfg.leaf == LeafKind::VQ ? cfg.codebook : nullptr);
        FeatureGrid up = resample(step.quantized, full);
        FeatureGrid blended = blend(up, filter);
        residual = grid_subtract(residual, blended);
        trace.quantized.push_back(std::move(blended));
        trace.codes.push_back(std::move(step.codes));
    }
    return trace;
}

ResidualTrace msrq_encode(const FeatureGrid& g, const ScaleSchedule& schedule,
                          const ResidualConfig& cfg, const BlendFilter& filter,
                          bool training, Rng& rng) {
    cfg.validate(g.dim());
    return msrq_encode_fixed(g, schedule, cfg, filter,
                             draw_active_steps(cfg, training, rng));
}

FeatureGrid msrq_decode(const std::vector<CodeGrid>& codes,
                        const ScaleSchedule& schedule,
                        const ResidualConfig& cfg, const BlendFilter& filter,
                        int dim) {
    cfg.validate(dim);
    filter.validate();
    if (codes.empty()) {
        throw ValueError("cannot decode an empty code list");
    }
    if (static_cast<int>(codes.size()) > schedule.steps()) {
        throw ShapeError("more code grids than schedule steps");
    }
    const int full = schedule.full_side();
    const Codebook* cb = cfg.leaf == LeafKind::VQ ? cfg.codebook : nullptr;
    FeatureGrid acc(full, full, dim);
    for (size_t i = 0; i < codes.size(); ++i) {
        const CodeGrid& cg = codes[i];
        int side = schedule.side(static_cast<int>(i));
        if (cg.height != side || cg.width != side) {
            throw ShapeError("code grid " + std::to_string(i) +
                             " is not at its scheduled resolution");
        }
        FeatureGrid step(side, side, dim);
        for (int pos = 0; pos < cg.positions(); ++pos) {
            std::vector<double> v = leaf_lookup(cfg.leaf, dim, cb,
                                                cg.codes[pos]);
            auto dst = step.vector(pos);
            std::copy(v.begin(), v.end(), dst.begin());
        }
        FeatureGrid blended = blend(resample(step, full), filter);
        acc = i == 0 ? std::move(blended) : grid_add(acc, blended);
    }
    return acc;
}

int64_t token_count(const ScaleSchedule& schedule, int branches) {
    if (branches < 1) {
        throw ValueError("branch count must be positive");
    }
    int64_t total = 0;
    for (int s : schedule.sides()) {
        total += static_cast<int64_t>(s) * s;
    }
    return total * branches;
}

}  // namespace xq
