#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dialogcore {

enum class UTestMethod { exact, normal_approx };

std::string_view to_string(UTestMethod method);

struct UTestResult {
    double u = 0;        // statistic for the first sample
    double p_value = 1;  // two-sided, in (0, 1]
    UTestMethod method = UTestMethod::exact;
    bool tie_corrected = false;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

// Largest sample size for which the exact null distribution is used.
inline constexpr std::size_t kExactUTestLimit = 12;

// U = sum over pairs of [x > y] + 0.5 [x == y].
double mann_whitney_statistic(std::span<const double> xs, std::span<const double> ys);

// Two-sided Mann-Whitney U test. Exact (rank-sum distribution by dynamic
// programming) when there are no ties and both samples have at most 12 values;
// otherwise the normal approximation with tie and continuity correction.
UTestResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys);

// Number of arrangements of n1 x's and n2 y's giving each value of U
// (index = U, length n1*n2 + 1). Sum is C(n1+n2, n1).
std::vector<double> exact_u_distribution(std::size_t n1, std::size_t n2);

enum class StdDivisor { population, sample };

struct SummaryRow {
    double mean = 0;
    double std_dev = 0;
    double max = 0;
    double min = 0;
    double range = 0;
    std::size_t count = 0;
};

// Sample divisor falls back to 0 spread for a single value.
SummaryRow summarize(std::span<const double> values, StdDivisor divisor = StdDivisor::population);

}  // namespace dialogcore
