#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dialogcore/embedding.hpp"

namespace dialogcore {

struct ModeAssignment {
    std::size_t k = 1;
    std::vector<std::size_t> labels;  // one per row, in [0, k)
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    double silhouette = 0.0;  // mean silhouette of the chosen K; 0 when k == 1
    std::uint64_t seed = 0;
};

struct KMeansOptions {
    std::size_t max_iterations = 300;
    double tolerance = 1e-6;  // max centroid shift that counts as converged
    std::size_t restarts = 4;  // best inertia wins
};

// Lloyd's algorithm with k-means++ seeding. Every cluster id in [0, k) is
// populated: an emptied cluster is reseeded with the point farthest from its
// centroid. Requires 1 <= k <= row count.
ModeAssignment kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                      const KMeansOptions& options = {});

// Mean Euclidean silhouette. Singleton clusters contribute 0.
double mean_silhouette(const EmbeddingMatrix& matrix, std::span<const std::size_t> labels, std::size_t k);

// Runs k-means for K in 2..min(k_max, distinct rows) and keeps the K with the
// highest mean silhouette (smaller K on ties). When every row is identical the
// result is the single-mode assignment k = 1.
ModeAssignment cluster_modes(const EmbeddingMatrix& matrix, std::size_t k_max, std::uint64_t seed,
                             const KMeansOptions& options = {});

struct ModeDistribution {
    std::vector<double> probs;  // all > 0, sum to 1
};

// Empirical frequencies of the labels that occur; absent clusters are dropped.
ModeDistribution distribution_from_labels(std::span<const std::size_t> labels);
ModeDistribution mode_distribution(const ModeAssignment& assignment);

// Natural-log Shannon entropy.
double entropy(const ModeDistribution& dist);
// entropy / ln(k_max), clamped to [0, 1]. Throws ValidationError for k_max < 2.
double normalized_entropy(const ModeDistribution& dist, std::size_t k_max);

}  // namespace dialogcore
