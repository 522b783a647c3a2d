#include "xq/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xq {

namespace {

std::span<const double> sample_at(std::span<const double> samples, int dim,
                                  int i) {
    return samples.subspan(static_cast<size_t>(i) * dim,
                           static_cast<size_t>(dim));
}

}  // namespace

KMeansResult kmeans_fit(std::span<const double> samples, int count, int dim,
                        int clusters, int iters, Rng& rng) {
    if (clusters < 1) {
        throw ValueError("cluster count must be >= 1");
    }
    if (count < clusters) {
        throw ValueError("sample count " + std::to_string(count) +
                         " is smaller than cluster count " +
                         std::to_string(clusters));
    }
    if (samples.size() != static_cast<size_t>(count) * dim) {
        throw ShapeError("sample buffer length mismatch");
    }
    for (double v : samples) {
        if (!std::isfinite(v)) {
            throw ValueError("samples contain a non-finite value");
        }
    }

    // k-means++ seeding.
    std::vector<double> centroids(static_cast<size_t>(clusters) * dim);
    std::vector<double> dist2(count, std::numeric_limits<double>::infinity());
    {
        int first = static_cast<int>(
                rng.uniform_int(0, static_cast<uint64_t>(count - 1)));
        auto s = sample_at(samples, dim, first);
        std::copy(s.begin(), s.end(), centroids.begin());
    }
    for (int k = 1; k < clusters; ++k) {
        std::span<const double> last{centroids.data() +
                                             static_cast<size_t>(k - 1) * dim,
                                     static_cast<size_t>(dim)};
        double total = 0.0;
        for (int i = 0; i < count; ++i) {
            double d = sq_dist(sample_at(samples, dim, i), last);
            dist2[i] = std::min(dist2[i], d);
            total += dist2[i];
        }
        int chosen = -1;
        if (total > 0.0) {
            double target = rng.next_double() * total;
            double acc = 0.0;
            for (int i = 0; i < count; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) {
                chosen = count - 1;
            }
        } else {
            chosen = static_cast<int>(
                    rng.uniform_int(0, static_cast<uint64_t>(count - 1)));
        }
        auto s = sample_at(samples, dim, chosen);
        std::copy(s.begin(), s.end(),
                  centroids.begin() + static_cast<size_t>(k) * dim);
    }

    // Lloyd iterations.
    KMeansResult result;
    std::vector<uint32_t> assign(count, 0);
    std::vector<uint32_t> prev_assign;
    std::vector<double> point_dist(count, 0.0);
    for (int it = 0; it < iters; ++it) {
        double objective = 0.0;
        for (int i = 0; i < count; ++i) {
            auto s = sample_at(samples, dim, i);
            uint32_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < clusters; ++k) {
                std::span<const double> c{
                        centroids.data() + static_cast<size_t>(k) * dim,
                        static_cast<size_t>(dim)};
                double d = sq_dist(s, c);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<uint32_t>(k);
                }
            }
            assign[i] = best;
            point_dist[i] = best_d;
            objective += best_d;
        }
        result.objective.push_back(objective / count);
        if (assign == prev_assign) {
            break;
        }
        prev_assign = assign;

        std::vector<double> sums(static_cast<size_t>(clusters) * dim, 0.0);
        std::vector<int> counts(clusters, 0);
        for (int i = 0; i < count; ++i) {
            auto s = sample_at(samples, dim, i);
            double* dst = sums.data() + static_cast<size_t>(assign[i]) * dim;
            for (int c = 0; c < dim; ++c) {
                dst[c] += s[c];
            }
            ++counts[assign[i]];
        }
        for (int k = 0; k < clusters; ++k) {
            double* dst = centroids.data() + static_cast<size_t>(k) * dim;
            if (counts[k] > 0) {
                const double* src = sums.data() + static_cast<size_t>(k) * dim;
                for (int c = 0; c < dim; ++c) {
                    dst[c] = src[c] / counts[k];
                }
            } else {
                // Reseed an empty cluster to the worst-served sample.
                int far = static_cast<int>(
                        std::max_element(point_dist.begin(), point_dist.end()) -
                        point_dist.begin());
                auto s = sample_at(samples, dim, far);
                std::copy(s.begin(), s.end(), dst);
                point_dist[far] = 0.0;
            }
        }
    }
    result.codebook = Codebook(clusters, dim, std::move(centroids));
    return result;
}

EmaCodebook::EmaCodebook(Codebook initial, double decay)
        : codebook_(std::move(initial)), decay_(decay) {
    if (decay <= 0.0 || decay > 1.0) {
        throw ValueError("EMA decay must lie in (0,1]");
    }
    counts_.assign(codebook_.size(), 0.0);
    sums_.assign(static_cast<size_t>(codebook_.size()) * codebook_.dim(), 0.0);
}

void EmaCodebook::update(std::span<const double> samples, int count,
                         std::span<const uint32_t> assignments) {
    const int dim = codebook_.dim();
    if (samples.size() != static_cast<size_t>(count) * dim ||
        assignments.size() != static_cast<size_t>(count)) {
        throw ShapeError("EMA batch buffer length mismatch");
    }
    for (uint32_t a : assignments) {
        if (a >= static_cast<uint32_t>(codebook_.size())) {
            throw ValueError("assignment index " + std::to_string(a) +
                             " out of range");
        }
    }
    for (double& c : counts_) {
        c *= decay_;
    }
    for (double& s : sums_) {
        s *= decay_;
    }
    std::vector<bool> touched(codebook_.size(), false);
    for (int i = 0; i < count; ++i) {
        uint32_t k = assignments[i];
        touched[k] = true;
        counts_[k] += 1.0;
        double* dst = sums_.data() + static_cast<size_t>(k) * dim;
        auto s = sample_at(samples, dim, i);
        for (int c = 0; c < dim; ++c) {
            dst[c] += s[c];
        }
    }
    constexpr double kEps = 1e-5;
    for (int k = 0; k < codebook_.size(); ++k) {
        if (!touched[k]) {
            continue;  // untouched codewords stay bitwise put
        }
        auto dst = codebook_.entry(k);
        const double* src = sums_.data() + static_cast<size_t>(k) * dim;
        for (int c = 0; c < dim; ++c) {
            dst[c] = src[c] / (counts_[k] + kEps);
        }
    }
}

double vq_loss(const FeatureGrid& z, const FeatureGrid& zq, double beta) {
    return (1.0 + beta) * mse(z, zq);
}

namespace {

double binary_entropy(double q) {
    double h = 0.0;
    if (q > 0.0) {
        h -= q * std::log(q);
    }
    if (q < 1.0) {
        h -= (1.0 - q) * std::log(1.0 - q);
    }
    return h;
}

}  // namespace

double entropy_aux(const FeatureGrid& pre_quant, double temperature) {
    if (temperature <= 0.0) {
        throw ValueError("entropy temperature must be positive");
    }
    const int dim = pre_quant.dim();
    const int n = pre_quant.positions();
    double per_sample = 0.0;
    std::vector<double> mean_q(dim, 0.0);
    for (int pos = 0; pos < n; ++pos) {
        auto v = pre_quant.vector(pos);
        for (int c = 0; c < dim; ++c) {
            double q = 1.0 / (1.0 + std::exp(-2.0 * v[c] / temperature));
            per_sample += binary_entropy(q);
            mean_q[c] += q;
        }
    }
    per_sample /= static_cast<double>(n) * dim;
    double batch = 0.0;
    for (int c = 0; c < dim; ++c) {
        batch += binary_entropy(mean_q[c] / n);
    }
    batch /= dim;
    return per_sample - batch;
}

double composite_loss(double recon, double vq, double aux,
                      const LossWeights& w) {
    if (!std::isfinite(recon) || !std::isfinite(vq) || !std::isfinite(aux)) {
        throw ValueError("loss terms must be finite");
    }
    return w.recon * recon + w.vq * vq + w.aux * aux;
}

UtilizationTracker::UtilizationTracker(uint64_t codebook_size)
        : size_(codebook_size) {
    if (codebook_size == 0) {
        throw ValueError("codebook size must be >= 1");
    }
    counters_ = std::make_unique<std::atomic<uint64_t>[]>(codebook_size);
    for (uint64_t i = 0; i < codebook_size; ++i) {
        counters_[i].store(0, std::memory_order_relaxed);
    }
}

void UtilizationTracker::record(uint32_t code) {
    if (code >= size_) {
        throw ValueError("code " + std::to_string(code) +
                         " out of range for tracker size " +
                         std::to_string(size_));
    }
    counters_[code].fetch_add(1, std::memory_order_relaxed);
}

void UtilizationTracker::record_all(std::span<const uint32_t> codes) {
    for (uint32_t c : codes) {
        record(c);
    }
}

uint64_t UtilizationTracker::hits(uint32_t code) const {
    return counters_[code].load(std::memory_order_relaxed);
}

double UtilizationTracker::utilization() const {
    uint64_t used = 0;
    for (uint64_t i = 0; i < size_; ++i) {
        if (counters_[i].load(std::memory_order_relaxed) > 0) {
            ++used;
        }
    }
    return static_cast<double>(used) / static_cast<double>(size_);
}

}  // namespace xq
