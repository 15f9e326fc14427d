#include "dialogcore/metric.hpp"

#include <algorithm>
#include <cmath>

#include "dialogcore/error.hpp"
#include "dialogcore/parallel.hpp"

namespace dialogcore {

namespace {

constexpr std::pair<CoreFlag, const char*> kFlagNames[] = {
    {CoreFlag::fit_fallback, "fit_fallback"},
    {CoreFlag::stagnation_clamped, "stagnation_clamped"},
    {CoreFlag::degenerate_modes, "degenerate_modes"},
    {CoreFlag::empty_ngrams, "empty_ngrams"},
    {CoreFlag::short_dialog, "short_dialog"},
};

bool positive_finite(double x) { return x > 0 && std::isfinite(x); }

}  // namespace

void CoreConfig::validate() const {
    if (ngram_n < 1) throw ValidationError("ngram order must be >= 1");
    if (k_max < 2) throw ValidationError("kmax must be >= 2");
    if (alpha_source == ExponentSource::explicit_value && !positive_finite(alpha))
        throw ValidationError("alpha must be positive and finite");
    if (beta_source == ExponentSource::explicit_value && !positive_finite(beta))
        throw ValidationError("beta must be positive and finite");
    if (!positive_finite(fallback_exponent)) throw ValidationError("fallback exponent must be positive and finite");
    if (heaps_stride < 1) throw ValidationError("Heaps stride must be >= 1");
    if (zipf_filter.min_count < 1) throw ValidationError("Zipf min_count must be >= 1");
}

std::vector<std::string> CoreFlags::names() const {
    std::vector<std::string> out;
    for (const auto& [flag, name] : kFlagNames)
        if (has(flag)) out.emplace_back(name);
    return out;
}

std::string CoreFlags::to_string() const {
    std::string out;
    for (const auto& name : names()) {
        if (!out.empty()) out.push_back('|');
        out += name;
    }
    return out;
}

std::optional<double> repeated_fraction(const NgramTable& table, RepetitionMode mode) {
    if (table.total_occurrences == 0 || table.counts.empty()) return std::nullopt;
    std::size_t repeated_occurrences = 0, repeated_types = 0;
    for (const auto& [gram, count] : table.counts) {
        if (count > 1) {
            repeated_occurrences += count;
            ++repeated_types;
        }
    }
    if (mode == RepetitionMode::distinct_types)
        return static_cast<double>(repeated_types) / static_cast<double>(table.counts.size());
    return static_cast<double>(repeated_occurrences) / static_cast<double>(table.total_occurrences);
}

CoreBreakdown combine_factors(double entropy_term, std::optional<double> repetition_ratio,
                              std::optional<double> raw_stagnation, double alpha, double beta) {
    CoreBreakdown b;
    b.alpha_used = alpha;
    b.beta_used = beta;
    b.entropy_term = std::clamp(entropy_term, 0.0, 1.0);

    if (repetition_ratio) {
        b.repetition_ratio = std::clamp(*repetition_ratio, 0.0, 1.0);
        b.repetition_term = std::pow(1.0 - b.repetition_ratio, alpha);
    } else {
        b.repetition_ratio = 0.0;
        b.repetition_term = 1.0;
        b.flags.set(CoreFlag::empty_ngrams);
    }

    if (raw_stagnation) {
        b.raw_stagnation = std::clamp(*raw_stagnation, -1.0, 1.0);
        double base = 1.0 - b.raw_stagnation;
        if (base > 1.0 || base < 0.0) {
            base = std::clamp(base, 0.0, 1.0);
            b.flags.set(CoreFlag::stagnation_clamped);
        }
        b.stagnation_term = std::pow(base, beta);
    } else {
        b.raw_stagnation = 0.0;
        b.stagnation_term = 0.0;
        b.flags.set(CoreFlag::short_dialog);
    }

    b.core = std::clamp(b.entropy_term * b.repetition_term * b.stagnation_term, 0.0, 1.0);
    return b;
}

Exponents resolve_exponents(const Corpus& corpus, const CoreConfig& config) {
    Exponents e;
    if (config.alpha_source == ExponentSource::explicit_value) {
        e.alpha = config.alpha;
    } else {
        try {
            e.zipf = fit_zipf(rank_frequency(corpus), config.zipf_filter);
            e.alpha = e.zipf->exponent;
        } catch (const FitError&) {
            e.alpha = config.fallback_exponent;
            e.fallback = true;
        }
    }
    if (config.beta_source == ExponentSource::explicit_value) {
        e.beta = config.beta;
    } else {
        try {
            e.heaps = fit_heaps(vocab_growth(corpus, config.heaps_stride));
            e.beta = e.heaps->exponent;
        } catch (const FitError&) {
            e.beta = config.fallback_exponent;
            e.fallback = true;
        }
    }
    return e;
}

namespace {

void check_inputs(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config) {
    config.validate();
    if (corpus.empty() || corpus.token_count() == 0) throw ValidationError("CORE requires a corpus with tokens");
    if (matrix.rows() != corpus.utterance_count())
        throw ValidationError("embedding matrix has " + std::to_string(matrix.rows()) + " rows for " +
                              std::to_string(corpus.utterance_count()) + " utterances");
    const bool any_pair = std::any_of(corpus.dialogs().begin(), corpus.dialogs().end(),
                                      [](const Dialog& d) { return d.utterances.size() >= 2; });
    if (!any_pair) throw ValidationError("CORE requires at least one dialog with 2 or more utterances");
}

CoreBreakdown corpus_breakdown(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config,
                               const ModeAssignment& assignment, const Exponents& exponents) {
    const double entropy_term = normalized_entropy(mode_distribution(assignment), config.k_max);
    const auto ratio = repeated_fraction(extract_ngrams(corpus, config.ngram_n), config.repetition_mode);

    double sum = 0;
    std::size_t used = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto rows = dialog_rows(matrix, corpus, d);
        if (auto s = dialog_stagnation(rows)) {
            sum += *s;
            ++used;
        }
    }
    auto b = combine_factors(entropy_term, ratio, sum / static_cast<double>(used), exponents.alpha, exponents.beta);
    if (assignment.k == 1) b.flags.set(CoreFlag::degenerate_modes);
    if (exponents.fallback) b.flags.set(CoreFlag::fit_fallback);
    return b;
}

}  // namespace

std::vector<DialogCore> core_per_dialog(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config,
                                        const ModeAssignment& corpus_assignment, const Exponents& exponents) {
    config.validate();
    if (corpus_assignment.labels.size() != corpus.utterance_count())
        throw ValidationError("mode assignment is not aligned to the corpus");

    std::vector<DialogCore> out(corpus.size());
    parallel_for(corpus.size(), config.threads, [&](std::size_t d) {
        const auto& dialog = corpus.dialogs()[d];
        const auto first = corpus.first_utterance_offset(d);
        const std::span<const std::size_t> labels(corpus_assignment.labels.data() + first, dialog.utterances.size());
        const auto dist = distribution_from_labels(labels);
        const double entropy_term = normalized_entropy(dist, config.k_max);
        const auto ratio = repeated_fraction(count_ngrams(corpus.dialog_tokens(d), config.ngram_n),
                                             config.repetition_mode);
        const auto rows = dialog_rows(matrix, corpus, d);
        auto b = combine_factors(entropy_term, ratio, dialog_stagnation(rows), exponents.alpha, exponents.beta);
        if (dist.probs.size() <= 1) b.flags.set(CoreFlag::degenerate_modes);
        if (exponents.fallback) b.flags.set(CoreFlag::fit_fallback);
        out[d] = DialogCore{dialog.id, dialog.condition, b};
    });
    return out;
}

CoreAnalysis analyze_core(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config) {
    check_inputs(corpus, matrix, config);
    CoreAnalysis a;
    a.exponents = resolve_exponents(corpus, config);
    a.assignment = cluster_modes(matrix, config.k_max, config.cluster_seed);
    a.corpus = corpus_breakdown(corpus, matrix, config, a.assignment, a.exponents);
    a.per_dialog = core_per_dialog(corpus, matrix, config, a.assignment, a.exponents);
    return a;
}

CoreBreakdown compute_core(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config) {
    check_inputs(corpus, matrix, config);
    const auto exponents = resolve_exponents(corpus, config);
    const auto assignment = cluster_modes(matrix, config.k_max, config.cluster_seed);
    return corpus_breakdown(corpus, matrix, config, assignment, exponents);
}

}  // namespace dialogcore
