#include "dialogcore/modes.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "dialogcore/error.hpp"

namespace dialogcore {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

using Centroids = std::vector<std::vector<double>>;

Centroids seed_plus_plus(const EmbeddingMatrix& m, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = m.rows();
    Centroids centers;
    centers.reserve(k);
    const auto first = static_cast<std::size_t>(rng() % n);
    centers.emplace_back(m.row(first).begin(), m.row(first).end());

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(m.row(i), centers[0]);
    while (centers.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0) {
            const double target = unit_draw(rng) * total;
            double acc = 0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng() % n);
        }
        centers.emplace_back(m.row(pick).begin(), m.row(pick).end());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(m.row(i), centers.back()));
    }
    return centers;
}

struct LloydResult {
    std::vector<std::size_t> labels;
    Centroids centroids;
    double inertia = 0;
};

LloydResult lloyd(const EmbeddingMatrix& m, Centroids centers, const KMeansOptions& options) {
    const std::size_t n = m.rows(), k = centers.size(), dim = m.dim();
    std::vector<std::size_t> labels(n, 0);
    std::vector<double> dist(n, 0);
    [[maybe_unused]] double previous = std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        double inertia = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(m.row(i), centers[c]);
                if (d < best) {
                    best = d;
                    labels[i] = c;
                }
            }
            dist[i] = best;
            inertia += best;
        }
        assert(inertia <= previous + 1e-9 * std::max(1.0, previous) && "k-means inertia increased");
        previous = inertia;

        std::vector<std::size_t> sizes(k, 0);
        for (auto l : labels) ++sizes[l];
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i)
                if (sizes[labels[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
            if (far == n) throw ValidationError("k-means: more clusters than points");
            --sizes[labels[far]];
            labels[far] = c;
            sizes[c] = 1;
            dist[far] = 0;
        }

        Centroids updated(k, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            auto row = m.row(i);
            for (std::size_t j = 0; j < dim; ++j) updated[labels[i]][j] += row[j];
        }
        double shift = 0;
        for (std::size_t c = 0; c < k; ++c) {
            for (auto& x : updated[c]) x /= static_cast<double>(sizes[c]);
            shift = std::max(shift, std::sqrt(squared_distance(updated[c], centers[c])));
        }
        centers = std::move(updated);
        if (shift < options.tolerance) break;
    }

    LloydResult out;
    out.inertia = 0;
    for (std::size_t i = 0; i < n; ++i) out.inertia += squared_distance(m.row(i), centers[labels[i]]);
    out.labels = std::move(labels);
    out.centroids = std::move(centers);
    return out;
}

std::size_t distinct_rows(const EmbeddingMatrix& m) {
    std::vector<std::size_t> order(m.rows());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        auto ra = m.row(a), rb = m.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t count = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size(); ++i)
        if (less(order[i - 1], order[i])) ++count;
    return count;
}

}  // namespace

ModeAssignment kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
    if (k < 1 || k > matrix.rows()) throw ValidationError("k-means: k must be in [1, rows]");
    ModeAssignment best;
    bool have = false;
    const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
    for (std::size_t r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * r);
        auto result = lloyd(matrix, seed_plus_plus(matrix, k, rng), options);
        if (!have || result.inertia < best.inertia) {
            best.k = k;
            best.labels = std::move(result.labels);
            best.centroids = std::move(result.centroids);
            best.inertia = result.inertia;
            have = true;
        }
    }
    best.seed = seed;
    return best;
}

double mean_silhouette(const EmbeddingMatrix& matrix, std::span<const std::size_t> labels, std::size_t k) {
    const std::size_t n = matrix.rows();
    if (labels.size() != n) throw ValidationError("silhouette: label count does not match rows");
    if (n == 0 || k < 2) return 0.0;

    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];

    // Cache pairwise distances for corpus-scale inputs; recompute for huge ones.
    constexpr std::size_t cache_limit = 4096;
    std::vector<double> cache;
    if (n <= cache_limit) {
        cache.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                cache[i * n + j] = cache[j * n + i] = std::sqrt(squared_distance(matrix.row(i), matrix.row(j)));
    }
    auto distance = [&](std::size_t i, std::size_t j) {
        return cache.empty() ? std::sqrt(squared_distance(matrix.row(i), matrix.row(j))) : cache[i * n + j];
    };

    double total = 0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = labels[i];
        if (sizes[own] <= 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[labels[j]] += distance(i, j);
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        const double denom = std::max(a, b);
        if (denom > 0 && std::isfinite(b)) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

ModeAssignment cluster_modes(const EmbeddingMatrix& matrix, std::size_t k_max, std::uint64_t seed,
                             const KMeansOptions& options) {
    if (k_max < 2) throw ValidationError("k_max must be >= 2");
    if (matrix.rows() == 0) throw ValidationError("cannot cluster an empty embedding matrix");

    const std::size_t distinct = distinct_rows(matrix);
    if (distinct < 2) {
        ModeAssignment single;
        single.k = 1;
        single.labels.assign(matrix.rows(), 0);
        single.centroids.emplace_back(matrix.row(0).begin(), matrix.row(0).end());
        single.seed = seed;
        return single;
    }

    ModeAssignment best;
    double best_score = -std::numeric_limits<double>::infinity();
    const std::size_t upper = std::min(k_max, distinct);
    for (std::size_t k = 2; k <= upper; ++k) {
        auto candidate = kmeans(matrix, k, seed, options);
        candidate.silhouette = mean_silhouette(matrix, candidate.labels, k);
        if (candidate.silhouette > best_score) {
            best_score = candidate.silhouette;
            best = std::move(candidate);
        }
    }
    return best;
}

ModeDistribution distribution_from_labels(std::span<const std::size_t> labels) {
    ModeDistribution dist;
    if (labels.empty()) return dist;
    std::map<std::size_t, std::size_t> counts;
    for (auto l : labels) ++counts[l];
    for (const auto& [label, count] : counts)
        dist.probs.push_back(static_cast<double>(count) / static_cast<double>(labels.size()));
    return dist;
}

ModeDistribution mode_distribution(const ModeAssignment& assignment) {
    return distribution_from_labels(assignment.labels);
}

double entropy(const ModeDistribution& dist) {
    double h = 0;
    for (double p : dist.probs)
        if (p > 0) h -= p * std::log(p);
    return std::max(0.0, h);
}

double normalized_entropy(const ModeDistribution& dist, std::size_t k_max) {
    if (k_max < 2) throw ValidationError("k_max must be >= 2 for entropy normalization");
    return std::clamp(entropy(dist) / std::log(static_cast<double>(k_max)), 0.0, 1.0);
}

}  // namespace dialogcore
