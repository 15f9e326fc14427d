#include "dialogcore/lawfit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dialogcore/error.hpp"

namespace dialogcore {

std::string_view to_string(FitMethod) { return "loglog_ls"; }

FitResult fit_loglog(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw FitError("log-log fit: x and y lengths differ");
    const std::size_t n = xs.size();
    if (n < 2) throw FitError("log-log fit needs at least 2 points, got " + std::to_string(n));

    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0)) throw FitError("log-log fit requires positive coordinates");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = lx[i] - mx, dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0)) throw FitError("log-log fit: x values have no spread");

    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        ss_res += r * r;
    }

    FitResult fit;
    fit.exponent = slope;
    fit.log_prefactor = intercept;
    fit.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.slope_stderr = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
    fit.points_used = n;
    return fit;
}

FitResult fit_zipf(const TokenStats& stats, const ZipfFilter& filter) {
    std::vector<double> ranks, counts;
    const std::size_t min_count = std::max<std::size_t>(1, filter.min_count);
    for (std::size_t i = 0; i < stats.entries.size(); ++i) {
        const std::size_t rank = i + 1;
        if (filter.max_rank && rank > *filter.max_rank) break;
        if (stats.entries[i].count < min_count) continue;
        ranks.push_back(static_cast<double>(rank));
        counts.push_back(static_cast<double>(stats.entries[i].count));
    }
    if (ranks.size() < 2)
        throw FitError("Zipf fit: only " + std::to_string(ranks.size()) + " rank(s) with count >= " +
                       std::to_string(min_count));
    auto fit = fit_loglog(ranks, counts);
    fit.exponent = -fit.exponent;
    if (!(fit.exponent > 0) || !std::isfinite(fit.exponent))
        throw FitError("Zipf fit: rank-frequency slope is not negative");
    return fit;
}

FitResult fit_heaps(const VocabGrowthCurve& curve) {
    std::vector<double> ns, vs;
    ns.reserve(curve.points.size());
    vs.reserve(curve.points.size());
    for (const auto& p : curve.points) {
        if (p.n < 1 || p.v < 1) throw FitError("Heaps fit: curve points need n >= 1 and v >= 1");
        ns.push_back(static_cast<double>(p.n));
        vs.push_back(static_cast<double>(p.v));
    }
    if (ns.size() < 2) throw FitError("Heaps fit needs at least 2 curve points, got " + std::to_string(ns.size()));
    auto fit = fit_loglog(ns, vs);
    if (!(fit.exponent > 0) || !std::isfinite(fit.exponent))
        throw FitError("Heaps fit: vocabulary growth slope is not positive");
    return fit;
}

std::vector<std::string> synth_zipf_stream(double alpha, std::size_t vocab_size, std::size_t n_tokens,
                                           std::uint64_t seed) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ValidationError("synth_zipf_stream: alpha must be > 0");
    if (vocab_size < 2) throw ValidationError("synth_zipf_stream: vocab_size must be >= 2");
    if (n_tokens < 1) throw ValidationError("synth_zipf_stream: n_tokens must be >= 1");

    std::vector<double> cdf(vocab_size);
    double acc = 0;
    for (std::size_t r = 1; r <= vocab_size; ++r) {
        acc += std::pow(static_cast<double>(r), -alpha);
        cdf[r - 1] = acc;
    }
    for (auto& c : cdf) c /= acc;
    cdf.back() = 1.0;

    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    out.reserve(n_tokens);
    for (std::size_t i = 0; i < n_tokens; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto rank = static_cast<std::size_t>(it - cdf.begin()) + 1;
        out.push_back("w" + std::to_string(std::min(rank, vocab_size)));
    }
    return out;
}

}  // namespace dialogcore
