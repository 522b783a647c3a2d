#pragma once

#include <optional>
#include <span>

#include "xq/core.hpp"

namespace xq {

enum class LeafKind { VQ, LFQ, BSQ };

const char* leaf_name(LeafKind kind);

/// One quantized d-vector: the code, the quantized value and the squared
/// quantization error.
struct QuantizedVector {
    uint32_t code = 0;
    std::vector<double> vector;
    double sq_error = 0.0;
};

/// Nearest-codeword quantization. Ties broken by lowest index.
QuantizedVector vq_quantize(std::span<const double> z, const Codebook& cb);

/// Per-dimension binary quantization to {-1, +1}. sign(0) = +1. The code
/// packs the sign bits with dimension 0 as the least-significant bit;
/// the implicit codebook has 2^d entries, so d is capped at 32.
QuantizedVector lfq_quantize(std::span<const double> z);

/// LFQ after L2 normalization; output components are sign(u)/sqrt(d) so the
/// quantized vector lies on the unit sphere. Rejects the zero vector.
QuantizedVector bsq_quantize(std::span<const double> z);

/// Implicit or explicit codebook size for a leaf of the given dimension.
uint64_t leaf_codebook_size(LeafKind kind, int dim, const Codebook* cb);

/// Bits needed to address one code of this leaf.
int leaf_code_bits(LeafKind kind, int dim, const Codebook* cb);

/// The quantized vector a code addresses (codeword or sign pattern).
std::vector<double> leaf_lookup(LeafKind kind, int dim, const Codebook* cb,
                                uint32_t code);

struct GridQuantResult {
    FeatureGrid quantized;
    CodeGrid codes;
    double total_sq_error = 0.0;
};

/// Applies the matching single-vector op at every grid position.
/// cb must be present iff kind == VQ.
GridQuantResult leaf_quantize_grid(const FeatureGrid& g, LeafKind kind,
                                   const Codebook* cb);

}  // namespace xq
