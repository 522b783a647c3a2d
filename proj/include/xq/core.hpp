#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xq {

// Error taxonomy shared by every module. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible grid / codebook shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Bad numeric values: non-finite input, out-of-range code, invalid parameter.
class ValueError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration (variant vs. codebooks, schedules, dims).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed serialized bytes.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// A height x width grid of dim-dimensional real vectors, row-major.
/// Immutable by convention once filled; all values must be finite.
class FeatureGrid {
public:
    FeatureGrid() = default;
    FeatureGrid(int height, int width, int dim);
    FeatureGrid(int height, int width, int dim, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int dim() const { return dim_; }
    int positions() const { return height_ * width_; }

    std::span<double> at(int row, int col) {
        return {data_.data() + static_cast<size_t>(row * width_ + col) * dim_,
                static_cast<size_t>(dim_)};
    }
    std::span<const double> at(int row, int col) const {
        return {data_.data() + static_cast<size_t>(row * width_ + col) * dim_,
                static_cast<size_t>(dim_)};
    }
    std::span<const double> vector(int pos) const {
        return {data_.data() + static_cast<size_t>(pos) * dim_,
                static_cast<size_t>(dim_)};
    }
    std::span<double> vector(int pos) {
        return {data_.data() + static_cast<size_t>(pos) * dim_,
                static_cast<size_t>(dim_)};
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const FeatureGrid& other) const {
        return height_ == other.height_ && width_ == other.width_ &&
               dim_ == other.dim_;
    }

    /// Throws ValueError if any element is not finite.
    void check_finite() const;

private:
    int height_ = 0;
    int width_ = 0;
    int dim_ = 0;
    std::vector<double> data_;
};

/// Ordered table of J codewords in R^d.
class Codebook {
public:
    Codebook() = default;
    Codebook(int size, int dim);
    Codebook(int size, int dim, std::vector<double> entries);

    int size() const { return size_; }
    int dim() const { return dim_; }

    std::span<const double> entry(int j) const {
        return {entries_.data() + static_cast<size_t>(j) * dim_,
                static_cast<size_t>(dim_)};
    }
    std::span<double> entry(int j) {
        return {entries_.data() + static_cast<size_t>(j) * dim_,
                static_cast<size_t>(dim_)};
    }
    const std::vector<double>& entries() const { return entries_; }

private:
    int size_ = 0;
    int dim_ = 0;
    std::vector<double> entries_;
};

/// Integer code per spatial position.
struct CodeGrid {
    int height = 0;
    int width = 0;
    std::vector<uint32_t> codes;

    int positions() const { return height * width; }
    uint32_t at(int row, int col) const { return codes[row * width + col]; }
};

/// Deterministic counter-based generator (splitmix64). Output k of a stream
/// seeded with s is mix(s + (k+1) * 0x9E3779B97F4A7C15) where mix is the
/// splitmix64 finalizer; identical seeds yield bit-identical streams.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi], inclusive.
    uint64_t uniform_int(uint64_t lo, uint64_t hi) {
        return lo + next_u64() % (hi - lo + 1);
    }

private:
    uint64_t state_;
};

/// Elementwise a - b. Throws ShapeError on mismatched shapes.
FeatureGrid grid_subtract(const FeatureGrid& a, const FeatureGrid& b);

/// Elementwise a + b.
FeatureGrid grid_add(const FeatureGrid& a, const FeatureGrid& b);

/// Mean of squared differences over all scalars.
double mse(const FeatureGrid& a, const FeatureGrid& b);

/// Squared Euclidean distance between two equal-length vectors.
double sq_dist(std::span<const double> a, std::span<const double> b);

/// Frobenius norm of the grid viewed as one long vector.
double grid_l2_norm(const FeatureGrid& g);

}  // namespace xq
