#pragma once

#include "xq/core.hpp"
#include "xq/leaf.hpp"

namespace xq {

/// Training-time quantizer dropout: with probability `ratio` a call truncates
/// to a uniform step count in [start, steps]; otherwise all steps run.
struct DropoutConfig {
    double ratio = 0.1;
    int start = 3;
};

struct ResidualConfig {
    int steps = 1;  // N
    DropoutConfig dropout;
    LeafKind leaf = LeafKind::VQ;
    const Codebook* codebook = nullptr;  // VQ only, shared across steps

    void validate(int dim) const;
};

/// Per-step record of a residual encode.
struct ResidualTrace {
    std::vector<FeatureGrid> quantized;   // z'_1 .. z'_n (full resolution)
    std::vector<CodeGrid> codes;          // per step
    std::vector<double> residual_norms;   // ||r_i|| going into step i
    int active_steps = 0;                 // n
};

/// Draws the active step count n for one call. Shared across product
/// branches: the hierarchy draws once and passes the result down.
int draw_active_steps(const ResidualConfig& cfg, bool training, Rng& rng);

/// Residual quantization with a fixed step count.
ResidualTrace rq_encode_fixed(const FeatureGrid& g, const ResidualConfig& cfg,
                              int active_steps);

/// Residual quantization; draws dropout from rng when training.
ResidualTrace rq_encode(const FeatureGrid& g, const ResidualConfig& cfg,
                        bool training, Rng& rng);

/// Sum of the per-step quantized grids.
FeatureGrid rq_sum(const ResidualTrace& t);

/// Reconstruction from stored codes alone.
FeatureGrid rq_decode(const std::vector<CodeGrid>& codes,
                      const ResidualConfig& cfg, int dim);

}  // namespace xq
