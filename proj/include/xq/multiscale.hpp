#pragma once

#include "xq/residual.hpp"

namespace xq {

/// Per-step resolutions s_1 <= ... <= s_N, last equal to the grid side.
class ScaleSchedule {
public:
    ScaleSchedule() = default;
    explicit ScaleSchedule(std::vector<int> sides);

    int steps() const { return static_cast<int>(sides_.size()); }
    int side(int step) const { return sides_[step]; }
    int full_side() const { return sides_.back(); }
    const std::vector<int>& sides() const { return sides_; }

    /// All-full-resolution schedule (the non-multi-scale degenerate case).
    static ScaleSchedule flat(int side, int steps);

private:
    std::vector<int> sides_;
};

/// gamma * conv(g) + (1 - gamma) * g, with a fixed odd-sized kernel.
struct BlendFilter {
    double gamma = 0.5;
    int kernel_side = 3;
    std::vector<double> kernel;  // kernel_side^2 weights, row-major

    void validate() const;

    /// Box kernel of the given odd side (weights 1/side^2).
    static BlendFilter box(double gamma, int side = 3);

    /// gamma = 0, equivalent to the identity.
    static BlendFilter identity();
};

/// Bilinear resample (align-corners = false), per channel. Same-side
/// resampling returns the input bitwise.
FeatureGrid resample(const FeatureGrid& g, int target_side);

/// Zero-padded convolution blended with the input per Eq. gamma mixing.
FeatureGrid blend(const FeatureGrid& g, const BlendFilter& f);

/// Multi-scale residual encode: per step, downsample the residual to s_i,
/// quantize, upsample to full resolution, blend, subtract. Codes are stored
/// at the step's native resolution; quantized grids at full resolution.
ResidualTrace msrq_encode_fixed(const FeatureGrid& g,
                                const ScaleSchedule& schedule,
                                const ResidualConfig& cfg,
                                const BlendFilter& filter, int active_steps);

ResidualTrace msrq_encode(const FeatureGrid& g, const ScaleSchedule& schedule,
                          const ResidualConfig& cfg, const BlendFilter& filter,
                          bool training, Rng& rng);

/// Reconstruction from per-step codes stored at native resolutions.
FeatureGrid msrq_decode(const std::vector<CodeGrid>& codes,
                        const ScaleSchedule& schedule,
                        const ResidualConfig& cfg, const BlendFilter& filter,
                        int dim);

/// branches * sum of s_i^2 over the schedule.
int64_t token_count(const ScaleSchedule& schedule, int branches);

}  // namespace xq
