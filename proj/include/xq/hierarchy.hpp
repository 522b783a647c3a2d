#pragma once

#include "xq/multiscale.hpp"
#include "xq/product.hpp"
#include "xq/residual.hpp"

namespace xq {

/// Full quantizer configuration: P product branches, each running N residual
/// steps of one leaf kind, optionally at multiple scales. The grammar fields
/// (multiscale, leaf, residual_steps, product_branches) round-trip through
/// the variant name; the rest is runtime configuration.
struct HierarchySpec {
    bool multiscale = false;
    LeafKind leaf = LeafKind::VQ;
    int residual_steps = 1;    // N
    int product_branches = 1;  // P

    ScaleSchedule schedule;    // empty => flat at the grid side
    DropoutConfig dropout;
    BlendFilter blend_filter = BlendFilter::box(0.5);

    bool grammar_equal(const HierarchySpec& other) const {
        return multiscale == other.multiscale && leaf == other.leaf &&
               residual_steps == other.residual_steps &&
               product_branches == other.product_branches;
    }
};

/// Parses "XQ[-MS]-{V|L|B}[-R<N>][-P<P>]". Omitted R means N=1, omitted P
/// means P=1. Malformed names raise ConfigError naming the offending token.
HierarchySpec parse_variant(const std::string& name);

/// Canonical name; omits R1 and P1. parse(format(s)) == s grammar-wise.
std::string format_variant(const HierarchySpec& spec);

/// Codes for one product branch, one CodeGrid per active residual step
/// (stored at the step's native resolution when multi-scale).
struct BranchCodes {
    std::vector<CodeGrid> steps;
};

struct QuantOutcome {
    FeatureGrid quantized;              // z', full resolution, full dim
    std::vector<BranchCodes> branches;  // P entries
    int active_steps = 0;               // shared dropout draw n
    double total_sq_error = 0.0;        // sum over positions and branches
    double recon_mse = 0.0;             // mse(input, quantized)
    double vq_loss_value = 0.0;         // (1 + beta) * recon_mse, beta = 0.25
    uint64_t total_bits = 0;            // information content of the codes
};

/// Resolved per-encode context: branch dims and VQ codebooks.
/// `codebooks` must hold one codebook per branch for VQ leaves and be empty
/// for LFQ/BSQ leaves.
QuantOutcome hier_encode(const FeatureGrid& g, const HierarchySpec& spec,
                         const std::vector<Codebook>& codebooks, bool training,
                         Rng& rng);

/// Deterministic reconstruction from codes alone. `dim` is the full channel
/// dimension (needed for LFQ/BSQ, where no codebook carries it).
FeatureGrid hier_decode(const std::vector<BranchCodes>& branches,
                        const HierarchySpec& spec,
                        const std::vector<Codebook>& codebooks, int side,
                        int dim);

/// The schedule an encode actually uses: the configured one, or a flat
/// schedule at `side` when none was configured.
ScaleSchedule effective_schedule(const HierarchySpec& spec, int side);

/// Per-branch channel dims (equal split for LFQ/BSQ, codebook dims for VQ).
std::vector<int> branch_dims(const HierarchySpec& spec,
                             const std::vector<Codebook>& codebooks, int dim);

}  // namespace xq
