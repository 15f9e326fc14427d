#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "dialogcore/error.hpp"
#include "dialogcore/modes.hpp"
#include "fixtures.hpp"

using namespace dialogcore;

namespace {

const std::vector<std::vector<double>> kCenters{{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};

void check_assignment(const ModeAssignment& a, std::size_t rows) {
    CHECK(a.labels.size() == rows);
    CHECK(a.centroids.size() == a.k);
    std::set<std::size_t> seen(a.labels.begin(), a.labels.end());
    CHECK(seen.size() == a.k);
    CHECK(*seen.rbegin() == a.k - 1);
    CHECK(a.inertia >= 0.0);
}

}  // namespace

TEST_CASE("cluster_modes recovers separated blobs") {
    const auto blobs = testing::gaussian_blobs(kCenters, 50, 0.01, 42);
    const auto a = cluster_modes(blobs.matrix, 10, 42);
    CHECK(a.k == 3);
    CHECK(testing::adjusted_rand_index(a.labels, blobs.truth) == 1.0);
    check_assignment(a, 150);
    for (int run = 0; run < 3; ++run) CHECK(cluster_modes(blobs.matrix, 10, 42).labels == a.labels);
}

TEST_CASE("cluster_modes on identical rows") {
    const auto m = testing::matrix_of({{1, 2}, {1, 2}, {1, 2}, {1, 2}});
    const auto a = cluster_modes(m, 10, 42);
    CHECK(a.k == 1);
    CHECK(entropy(mode_distribution(a)) == 0.0);
    check_assignment(a, 4);
}

TEST_CASE("cluster_modes caps K at the distinct row count") {
    const auto m = testing::matrix_of({{1, 0}, {1, 0}, {5, 5}, {5, 5}, {5, 5}});
    const auto a = cluster_modes(m, 10, 1);
    CHECK(a.k == 2);
    CHECK(a.labels[0] == a.labels[1]);
    CHECK(a.labels[2] == a.labels[4]);
    CHECK(a.labels[0] != a.labels[2]);
    CHECK_THROWS_AS(cluster_modes(m, 1, 1), ValidationError);
}

TEST_CASE("clustering is invariant to translation") {
    auto blobs = testing::gaussian_blobs({{0, 0}, {4, 1}, {1, 5}, {6, 6}}, 20, 0.8, 9);
    std::vector<std::vector<double>> shifted;
    for (std::size_t i = 0; i < blobs.matrix.rows(); ++i) {
        const auto r = blobs.matrix.row(i);
        shifted.push_back({r[0] + 1024.0, r[1] - 2048.0});
    }
    const auto a = cluster_modes(blobs.matrix, 6, 42);
    const auto b = cluster_modes(testing::matrix_of(shifted), 6, 42);
    CHECK(a.k == b.k);
    CHECK(a.labels == b.labels);
}

TEST_CASE("kmeans keeps every cluster populated") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + rng() % 30;
        std::vector<std::vector<double>> rows(n, std::vector<double>(3));
        for (auto& r : rows)
            for (auto& x : r) x = std::round(u(rng) * 2) / 2 + 0.01;
        const auto m = testing::matrix_of(rows);
        std::set<std::vector<double>> distinct(rows.begin(), rows.end());
        const std::size_t k = 1 + rng() % distinct.size();
        const auto a = kmeans(m, k, trial);
        CHECK(a.k == k);
        check_assignment(a, n);
    }
}

TEST_CASE("mean_silhouette") {
    const auto m = testing::matrix_of({{-1}, {-2}, {-11}, {-12}});
    const std::vector<std::size_t> labels{0, 0, 1, 1};
    // a = 1 for every point; b = mean distance to the other pair.
    const double s0 = 1 - 1.0 / 10.5, s1 = 1 - 1.0 / 9.5;
    CHECK(mean_silhouette(m, labels, 2) == doctest::Approx((s0 + s1) / 2).epsilon(1e-12));
    const std::vector<std::size_t> singleton{0, 1, 1, 1};
    const double s = mean_silhouette(m, singleton, 2);
    CHECK(s > -1.0);
    CHECK(s < 1.0);
}

TEST_CASE("mode_distribution") {
    CHECK(distribution_from_labels(std::vector<std::size_t>{0, 0, 1, 1}).probs == std::vector<double>{0.5, 0.5});
    CHECK(distribution_from_labels(std::vector<std::size_t>{0, 0, 0}).probs == std::vector<double>{1.0});
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        std::vector<std::size_t> labels(1 + rng() % 60);
        for (auto& l : labels) l = rng() % 7;
        const auto d = distribution_from_labels(labels);
        double sum = 0;
        for (double p : d.probs) {
            CHECK(p > 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("entropy") {
    CHECK(entropy({{1.0}}) == 0.0);
    CHECK(entropy({{0.25, 0.25, 0.25, 0.25}}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(std::abs(entropy({{0.5, 0.25, 0.25}}) - 1.5 * std::log(2.0)) <= 1e-12);
    CHECK(entropy({{0.25, 0.5, 0.25}}) == entropy({{0.5, 0.25, 0.25}}));
}

TEST_CASE("normalized_entropy") {
    for (std::size_t k = 2; k <= 10; ++k) {
        const ModeDistribution uniform{std::vector<double>(k, 1.0 / double(k))};
        CHECK(std::abs(normalized_entropy(uniform, k) - 1.0) <= 1e-12);
    }
    CHECK(normalized_entropy({{1.0}}, 5) == 0.0);
    CHECK(normalized_entropy({{0.5, 0.5}}, 4) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(normalized_entropy({{1.0}}, 1), ValidationError);

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.01, 1);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> p(1 + rng() % 10);
        double s = 0;
        for (auto& x : p) s += x = u(rng);
        for (auto& x : p) x /= s;
        const double h = normalized_entropy({p}, 2 + rng() % 9);
        CHECK(h >= 0.0);
        CHECK(h <= 1.0);
    }
}
