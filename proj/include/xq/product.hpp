#pragma once

#include <functional>

#include "xq/core.hpp"

namespace xq {

/// Channel split into P contiguous sub-vectors. Branch p owns channels
/// [offset_p, offset_p + dims[p]).
struct ProductConfig {
    std::vector<int> branch_dims;  // d_1 .. d_P, sum = d

    int branches() const { return static_cast<int>(branch_dims.size()); }
    int total_dim() const;
    void validate() const;

    /// Equal split of `dim` into `branches` parts; throws when indivisible.
    static ProductConfig equal_split(int dim, int branches);
};

/// Splits g channel-wise into the configured branches.
std::vector<FeatureGrid> pq_split(const FeatureGrid& g,
                                  const ProductConfig& cfg);

/// Channel-wise concatenation, inverse of pq_split.
FeatureGrid pq_join(const std::vector<FeatureGrid>& parts);

struct BranchQuantResult {
    FeatureGrid quantized;
    double sq_error = 0.0;
};

using BranchQuantizer =
        std::function<BranchQuantResult(int branch, const FeatureGrid& part)>;

struct ProductQuantResult {
    FeatureGrid quantized;
    std::vector<double> branch_sq_errors;
    double total_sq_error = 0.0;
};

/// Quantizes each branch independently with the supplied sub-quantizer and
/// concatenates the results channel-wise.
ProductQuantResult pq_quantize(const FeatureGrid& g, const ProductConfig& cfg,
                               const BranchQuantizer& quantize_branch);

}  // namespace xq
