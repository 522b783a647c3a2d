#include "xq/leaf.hpp"

#include <cmath>

namespace xq {

const char* leaf_name(LeafKind kind) {
    switch (kind) {
        case LeafKind::VQ:
            return "VQ";
        case LeafKind::LFQ:
            return "LFQ";
        case LeafKind::BSQ:
            return "BSQ";
    }
    return "?";
}

namespace {

void check_binary_dim(int d) {
    if (d < 1 || d > 32) {
        throw ValueError("LFQ/BSQ dimension must be in [1,32], got " +
                         std::to_string(d));
    }
}

void check_finite_vec(std::span<const double> z) {
    for (double v : z) {
        if (!std::isfinite(v)) {
            throw ValueError("input vector contains a non-finite value");
        }
    }
}

}  // namespace

QuantizedVector vq_quantize(std::span<const double> z, const Codebook& cb) {
    if (static_cast<int>(z.size()) != cb.dim()) {
        throw ShapeError("vector dim " + std::to_string(z.size()) +
                         " does not match codebook dim " +
                         std::to_string(cb.dim()));
    }
    check_finite_vec(z);
    uint32_t best = 0;
    double best_dist = sq_dist(z, cb.entry(0));
    for (int j = 1; j < cb.size(); ++j) {
        double d = sq_dist(z, cb.entry(j));
        if (d < best_dist) {
            best_dist = d;
            best = static_cast<uint32_t>(j);
        }
    }
    auto e = cb.entry(static_cast<int>(best));
    return {best, {e.begin(), e.end()}, best_dist};
}

QuantizedVector lfq_quantize(std::span<const double> z) {
    check_binary_dim(static_cast<int>(z.size()));
    check_finite_vec(z);
    QuantizedVector out;
    out.vector.resize(z.size());
    for (size_t p = 0; p < z.size(); ++p) {
        bool positive = !(z[p] < 0.0);  // sign(0) = +1
        out.vector[p] = positive ? 1.0 : -1.0;
        if (positive) {
            out.code |= 1u << p;
        }
        double d = z[p] - out.vector[p];
        out.sq_error += d * d;
    }
    return out;
}

QuantizedVector bsq_quantize(std::span<const double> z) {
    check_binary_dim(static_cast<int>(z.size()));
    check_finite_vec(z);
    double norm = 0.0;
    for (double v : z) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        throw ValueError("BSQ input is the zero vector; normalization undefined");
    }
    double scale = 1.0 / std::sqrt(static_cast<double>(z.size()));
    QuantizedVector out;
    out.vector.resize(z.size());
    for (size_t p = 0; p < z.size(); ++p) {
        bool positive = !(z[p] < 0.0);
        out.vector[p] = positive ? scale : -scale;
        if (positive) {
            out.code |= 1u << p;
        }
        double d = z[p] - out.vector[p];
        out.sq_error += d * d;
    }
    return out;
}

uint64_t leaf_codebook_size(LeafKind kind, int dim, const Codebook* cb) {
    if (kind == LeafKind::VQ) {
        if (cb == nullptr) {
            throw ConfigError("VQ requires a codebook");
        }
        return static_cast<uint64_t>(cb->size());
    }
    check_binary_dim(dim);
    return uint64_t{1} << dim;
}

int leaf_code_bits(LeafKind kind, int dim, const Codebook* cb) {
    if (kind == LeafKind::VQ) {
        if (cb == nullptr) {
            throw ConfigError("VQ requires a codebook");
        }
        int bits = 0;
        while ((uint64_t{1} << bits) < static_cast<uint64_t>(cb->size())) {
            ++bits;
        }
        return bits;  // ceil(log2 J); 0 for J=1
    }
    check_binary_dim(dim);
    return dim;
}

std::vector<double> leaf_lookup(LeafKind kind, int dim, const Codebook* cb,
                                uint32_t code) {
    if (kind == LeafKind::VQ) {
        if (cb == nullptr) {
            throw ConfigError("VQ requires a codebook");
        }
        if (code >= static_cast<uint32_t>(cb->size())) {
            throw ValueError("code " + std::to_string(code) +
                             " out of range for codebook size " +
                             std::to_string(cb->size()));
        }
        auto e = cb->entry(static_cast<int>(code));
        return {e.begin(), e.end()};
    }
    check_binary_dim(dim);
    if (dim < 32 && code >= (uint32_t{1} << dim)) {
        throw ValueError("code " + std::to_string(code) +
                         " out of range for " + std::to_string(dim) +
                         " binary dimensions");
    }
    double mag = kind == LeafKind::BSQ
                         ? 1.0 / std::sqrt(static_cast<double>(dim))
                         : 1.0;
    std::vector<double> out(dim);
    for (int p = 0; p < dim; ++p) {
        out[p] = (code >> p) & 1u ? mag : -mag;
    }
    return out;
}

GridQuantResult leaf_quantize_grid(const FeatureGrid& g, LeafKind kind,
                                   const Codebook* cb) {
    if (kind == LeafKind::VQ && cb == nullptr) {
        throw ConfigError("VQ grid quantization requires a codebook");
    }
    if (kind != LeafKind::VQ && cb != nullptr) {
        throw ConfigError("LFQ/BSQ grid quantization takes no codebook");
    }
    GridQuantResult out;
    out.quantized = FeatureGrid(g.height(), g.width(), g.dim());
    out.codes = {g.height(), g.width(),
                 std::vector<uint32_t>(static_cast<size_t>(g.positions()))};
    for (int pos = 0; pos < g.positions(); ++pos) {
        QuantizedVector q;
        switch (kind) {
            case LeafKind::VQ:
                q = vq_quantize(g.vector(pos), *cb);
                break;
            case LeafKind::LFQ:
                q = lfq_quantize(g.vector(pos));
                break;
            case LeafKind::BSQ:
                q = bsq_quantize(g.vector(pos));
                break;
        }
        auto dst = out.quantized.vector(pos);
        for (int c = 0; c < g.dim(); ++c) {
            dst[c] = q.vector[c];
        }
        out.codes.codes[pos] = q.code;
        out.total_sq_error += q.sq_error;
    }
    return out;
}

}  // namespace xq
