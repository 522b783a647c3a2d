#include "xq/product.hpp"

#include <numeric>

namespace xq {

int ProductConfig::total_dim() const {
    return std::accumulate(branch_dims.begin(), branch_dims.end(), 0);
}

void ProductConfig::validate() const {
    if (branch_dims.empty()) {
        throw ConfigError("product config needs at least one branch");
    }
    for (int d : branch_dims) {
        if (d < 1) {
            throw ConfigError("branch dimension must be >= 1");
        }
    }
}

ProductConfig ProductConfig::equal_split(int dim, int branches) {
    if (branches < 1) {
        throw ConfigError("branch count must be >= 1");
    }
    if (dim % branches != 0) {
        throw ConfigError("dim " + std::to_string(dim) +
                          " is not divisible by " + std::to_string(branches) +
                          " branches");
    }
    return {std::vector<int>(static_cast<size_t>(branches), dim / branches)};
}

std::vector<FeatureGrid> pq_split(const FeatureGrid& g,
                                  const ProductConfig& cfg) {
    cfg.validate();
    if (cfg.total_dim() != g.dim()) {
        throw ShapeError("branch dims sum to " +
                         std::to_string(cfg.total_dim()) +
                         " but grid dim is " + std::to_string(g.dim()));
    }
    std::vector<FeatureGrid> parts;
    parts.reserve(cfg.branch_dims.size());
    int offset = 0;
    for (int dp : cfg.branch_dims) {
        FeatureGrid part(g.height(), g.width(), dp);
        for (int pos = 0; pos < g.positions(); ++pos) {
            auto src = g.vector(pos);
            auto dst = part.vector(pos);
            for (int c = 0; c < dp; ++c) {
                dst[c] = src[offset + c];
            }
        }
        parts.push_back(std::move(part));
        offset += dp;
    }
    return parts;
}

FeatureGrid pq_join(const std::vector<FeatureGrid>& parts) {
    if (parts.empty()) {
        throw ValueError("cannot join an empty part list");
    }
    int dim = 0;
    for (const FeatureGrid& p : parts) {
        if (p.height() != parts.front().height() ||
            p.width() != parts.front().width()) {
            throw ShapeError("part spatial shapes differ");
        }
        dim += p.dim();
    }
    FeatureGrid out(parts.front().height(), parts.front().width(), dim);
    int offset = 0;
    for (const FeatureGrid& p : parts) {
        for (int pos = 0; pos < p.positions(); ++pos) {
            auto src = p.vector(pos);
            auto dst = out.vector(pos);
            for (int c = 0; c < p.dim(); ++c) {
                dst[offset + c] = src[c];
            }
        }
        offset += p.dim();
    }
    return out;
}

ProductQuantResult pq_quantize(const FeatureGrid& g, const ProductConfig& cfg,
                               const BranchQuantizer& quantize_branch) {
    std::vector<FeatureGrid> parts = pq_split(g, cfg);
    ProductQuantResult out;
    std::vector<FeatureGrid> quantized_parts;
    quantized_parts.reserve(parts.size());
    for (size_t p = 0; p < parts.size(); ++p) {
        BranchQuantResult r = quantize_branch(static_cast<int>(p), parts[p]);
        if (!r.quantized.same_shape(parts[p])) {
            throw ShapeError("branch quantizer changed the part shape");
        }
        out.branch_sq_errors.push_back(r.sq_error);
        out.total_sq_error += r.sq_error;
        quantized_parts.push_back(std::move(r.quantized));
    }
    out.quantized = pq_join(quantized_parts);
    return out;
}

}  // namespace xq
