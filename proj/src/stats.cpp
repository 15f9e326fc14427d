#include "dialogcore/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "dialogcore/error.hpp"

namespace dialogcore {

std::string_view to_string(UTestMethod method) {
    return method == UTestMethod::exact ? "exact" : "normal_approx";
}

double mann_whitney_statistic(std::span<const double> xs, std::span<const double> ys) {
    double u = 0;
    for (double x : xs)
        for (double y : ys) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    return u;
}

std::vector<double> exact_u_distribution(std::size_t n1, std::size_t n2) {
    // ways[i][j][u]: arrangements of i x's and j y's with statistic u. Adding
    // the largest element: an x beats all j y's (u += j); a y adds nothing.
    const std::size_t max_u = n1 * n2;
    std::vector<std::vector<std::vector<double>>> ways(n1 + 1, std::vector<std::vector<double>>(n2 + 1));
    for (std::size_t i = 0; i <= n1; ++i) {
        for (std::size_t j = 0; j <= n2; ++j) {
            auto& cell = ways[i][j];
            cell.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                cell[0] = 1.0;
                continue;
            }
            const auto& with_x = ways[i - 1][j];
            const auto& with_y = ways[i][j - 1];
            for (std::size_t u = 0; u < with_x.size(); ++u) cell[u + j] += with_x[u];
            for (std::size_t u = 0; u < with_y.size(); ++u) cell[u] += with_y[u];
        }
    }
    auto out = std::move(ways[n1][n2]);
    out.resize(max_u + 1, 0.0);
    return out;
}

UTestResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys) {
    if (xs.empty() || ys.empty()) throw ValidationError("Mann-Whitney U requires two non-empty samples");
    for (double v : xs)
        if (!std::isfinite(v)) throw ValidationError("Mann-Whitney U: non-finite value in first sample");
    for (double v : ys)
        if (!std::isfinite(v)) throw ValidationError("Mann-Whitney U: non-finite value in second sample");

    UTestResult r;
    r.n1 = xs.size();
    r.n2 = ys.size();
    r.u = mann_whitney_statistic(xs, ys);

    std::map<double, std::size_t> multiplicity;
    for (double v : xs) ++multiplicity[v];
    for (double v : ys) ++multiplicity[v];
    const std::size_t n = r.n1 + r.n2;
    const bool ties = multiplicity.size() < n;

    const double n1 = static_cast<double>(r.n1), n2 = static_cast<double>(r.n2);
    if (!ties && r.n1 <= kExactUTestLimit && r.n2 <= kExactUTestLimit) {
        r.method = UTestMethod::exact;
        const auto dist = exact_u_distribution(r.n1, r.n2);
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        const auto u = static_cast<std::size_t>(r.u);
        const double lower = std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(u) + 1, 0.0);
        const double upper = std::accumulate(dist.begin() + static_cast<std::ptrdiff_t>(u), dist.end(), 0.0);
        r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        return r;
    }

    r.method = UTestMethod::normal_approx;
    r.tie_corrected = ties;
    double tie_term = 0;
    for (const auto& [value, t] : multiplicity) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double nd = static_cast<double>(n);
    const double variance = n1 * n2 / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (!(variance > 0)) {
        r.p_value = 1.0;
        return r;
    }
    const double mean = n1 * n2 / 2.0;
    const double z = std::max(0.0, std::abs(r.u - mean) - 0.5) / std::sqrt(variance);
    r.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), std::numeric_limits<double>::min(), 1.0);
    return r;
}

SummaryRow summarize(std::span<const double> values, StdDivisor divisor) {
    if (values.empty()) throw ValidationError("cannot summarize an empty sample");
    SummaryRow row;
    row.count = values.size();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    row.min = *lo;
    row.max = *hi;
    row.range = row.max - row.min;
    const double n = static_cast<double>(values.size());
    row.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    // Summation order can push the mean a hair outside [min, max].
    row.mean = std::clamp(row.mean, row.min, row.max);
    double ss = 0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    const double denom = divisor == StdDivisor::population ? n : n - 1.0;
    row.std_dev = denom > 0 ? std::sqrt(ss / denom) : 0.0;
    return row;
}

}  // namespace dialogcore
