#include "xq/core.hpp"

#include <cmath>

namespace xq {

namespace {

void check_positive(int v, const char* what) {
    if (v <= 0) {
        throw ValueError(std::string(what) + " must be positive, got " +
                         std::to_string(v));
    }
}

}  // namespace

FeatureGrid::FeatureGrid(int height, int width, int dim)
        : height_(height), width_(width), dim_(dim) {
    check_positive(height, "height");
    check_positive(width, "width");
    check_positive(dim, "dim");
    data_.assign(static_cast<size_t>(height) * width * dim, 0.0);
}

FeatureGrid::FeatureGrid(int height, int width, int dim,
                         std::vector<double> data)
        : height_(height), width_(width), dim_(dim), data_(std::move(data)) {
    check_positive(height, "height");
    check_positive(width, "width");
    check_positive(dim, "dim");
    if (data_.size() != static_cast<size_t>(height) * width * dim) {
        throw ShapeError("grid data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(height) + "x" +
                         std::to_string(width) + "x" + std::to_string(dim));
    }
}

void FeatureGrid::check_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw ValueError("grid contains a non-finite value");
        }
    }
}

Codebook::Codebook(int size, int dim) : size_(size), dim_(dim) {
    check_positive(size, "codebook size");
    check_positive(dim, "codebook dim");
    entries_.assign(static_cast<size_t>(size) * dim, 0.0);
}

Codebook::Codebook(int size, int dim, std::vector<double> entries)
        : size_(size), dim_(dim), entries_(std::move(entries)) {
    check_positive(size, "codebook size");
    check_positive(dim, "codebook dim");
    if (entries_.size() != static_cast<size_t>(size) * dim) {
        throw ShapeError("codebook entries length mismatch");
    }
    for (double v : entries_) {
        if (!std::isfinite(v)) {
            throw ValueError("codebook contains a non-finite value");
        }
    }
}

static void require_same_shape(const FeatureGrid& a, const FeatureGrid& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("grid shape mismatch: " + std::to_string(a.height()) +
                         "x" + std::to_string(a.width()) + "x" +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.height()) + "x" +
                         std::to_string(b.width()) + "x" +
                         std::to_string(b.dim()));
    }
}

FeatureGrid grid_subtract(const FeatureGrid& a, const FeatureGrid& b) {
    require_same_shape(a, b);
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = a.data()[i] - b.data()[i];
    }
    return {a.height(), a.width(), a.dim(), std::move(out)};
}

FeatureGrid grid_add(const FeatureGrid& a, const FeatureGrid& b) {
    require_same_shape(a, b);
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = a.data()[i] + b.data()[i];
    }
    return {a.height(), a.width(), a.dim(), std::move(out)};
}

double mse(const FeatureGrid& a, const FeatureGrid& b) {
    require_same_shape(a, b);
    double acc = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data().size());
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double grid_l2_norm(const FeatureGrid& g) {
    double acc = 0.0;
    for (double v : g.data()) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

}  // namespace xq
