#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialogcore/corpus.hpp"

namespace dialogcore {

enum class FitMethod { loglog_ls };

std::string_view to_string(FitMethod method);

// A power law y = C * x^(+/-exponent) fitted by least squares in log-log space.
// For Zipf, exponent is the negated slope and log_prefactor is ln C; for Heaps,
// exponent is the slope and log_prefactor is ln K.
struct FitResult {
    double exponent = 0.0;
    double log_prefactor = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    std::size_t points_used = 0;
    FitMethod method = FitMethod::loglog_ls;
};

// Ordinary least squares of ln(y) on ln(x). Returns the raw regression (slope in
// `exponent`). Throws FitError with fewer than 2 points or no spread in x.
FitResult fit_loglog(std::span<const double> xs, std::span<const double> ys);

struct ZipfFilter {
    std::size_t min_count = 2;
    std::optional<std::size_t> max_rank;  // unbounded when empty
};

// Fits ln(count) against ln(rank) over entries with count >= min_count and
// rank <= max_rank. Throws FitError when fewer than 2 entries survive or the
// slope is not negative.
FitResult fit_zipf(const TokenStats& stats, const ZipfFilter& filter = {});

// Fits ln(v) against ln(n) over every curve point. Throws FitError with fewer
// than 2 points or a non-positive slope.
FitResult fit_heaps(const VocabGrowthCurve& curve);

// i.i.d. draws from P(rank r) proportional to r^-alpha over 1..vocab_size, named
// "w{r}". Uses a fixed 64-bit Mersenne Twister and its own unit-interval
// mapping so streams are identical across standard libraries.
std::vector<std::string> synth_zipf_stream(double alpha, std::size_t vocab_size, std::size_t n_tokens,
                                           std::uint64_t seed);

}  // namespace dialogcore
