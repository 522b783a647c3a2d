#pragma once

#include <atomic>
#include <memory>

#include "xq/core.hpp"

namespace xq {

struct LossWeights {
    double recon = 1.0;
    double vq = 1.0;
    double aux = 0.0;
};

struct KMeansResult {
    Codebook codebook;
    std::vector<double> objective;  // mean squared distance per iteration
};

/// Lloyd's algorithm with k-means++ initialization. `samples` is M x d
/// row-major; stops after `iters` iterations or when assignments settle.
/// Empty clusters are reseeded to the sample farthest from its centroid.
KMeansResult kmeans_fit(std::span<const double> samples, int count, int dim,
                        int clusters, int iters, Rng& rng);

/// EMA codebook maintenance state: decayed per-code counts and sums.
class EmaCodebook {
public:
    EmaCodebook(Codebook initial, double decay);

    /// Folds one batch of (sample, assignment) pairs into the running
    /// averages. Codewords become sum / (count + eps).
    void update(std::span<const double> samples, int count,
                std::span<const uint32_t> assignments);

    const Codebook& codebook() const { return codebook_; }

private:
    Codebook codebook_;
    double decay_;
    std::vector<double> counts_;
    std::vector<double> sums_;
};

/// (1 + beta) * mse(z, zq); a reported scalar, no gradients flow.
double vq_loss(const FeatureGrid& z, const FeatureGrid& zq, double beta);

/// Entropy auxiliary for binary leaves: mean per-sample binary entropy minus
/// the binary entropy of the mean soft bit probability, per dimension.
/// Zero at the symmetric all-zeros point, bounded below by -ln 2.
double entropy_aux(const FeatureGrid& pre_quant, double temperature);

double composite_loss(double recon, double vq, double aux,
                      const LossWeights& w);

/// Concurrent hit counting over a codebook; utilization is the fraction of
/// codes hit at least once.
class UtilizationTracker {
public:
    explicit UtilizationTracker(uint64_t codebook_size);

    void record(uint32_t code);
    void record_all(std::span<const uint32_t> codes);

    uint64_t codebook_size() const { return size_; }
    uint64_t hits(uint32_t code) const;
    double utilization() const;

private:
    uint64_t size_;
    std::unique_ptr<std::atomic<uint64_t>[]> counters_;
};

}  // namespace xq
