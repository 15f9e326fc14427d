#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialogcore/corpus.hpp"
#include "dialogcore/embedding.hpp"
#include "dialogcore/lawfit.hpp"
#include "dialogcore/modes.hpp"

namespace dialogcore {

enum class ExponentSource { fit_from_corpus, explicit_value };

// How the repeated share of n-grams is counted: by occurrences (the multiset
// reading, default) or by distinct types.
enum class RepetitionMode { occurrences, distinct_types };

struct CoreConfig {
    std::size_t ngram_n = 3;
    std::size_t k_max = 10;
    ExponentSource alpha_source = ExponentSource::fit_from_corpus;
    ExponentSource beta_source = ExponentSource::fit_from_corpus;
    double alpha = 1.0;
    double beta = 1.0;
    double fallback_exponent = 1.0;
    RepetitionMode repetition_mode = RepetitionMode::occurrences;
    std::uint64_t cluster_seed = 42;
    ZipfFilter zipf_filter;
    std::size_t heaps_stride = 50;
    int threads = 1;

    // Throws ValidationError when a field is out of range.
    void validate() const;
};

enum class CoreFlag : unsigned {
    fit_fallback = 1u << 0,
    stagnation_clamped = 1u << 1,
    degenerate_modes = 1u << 2,
    empty_ngrams = 1u << 3,
    short_dialog = 1u << 4,
};

struct CoreFlags {
    unsigned bits = 0;

    void set(CoreFlag f) { bits |= static_cast<unsigned>(f); }
    bool has(CoreFlag f) const { return (bits & static_cast<unsigned>(f)) != 0; }
    bool empty() const { return bits == 0; }
    // Flag names joined by '|', in declaration order.
    std::string to_string() const;
    std::vector<std::string> names() const;
};

struct CoreBreakdown {
    double entropy_term = 0;
    double repetition_ratio = 0;
    double repetition_term = 1;
    double raw_stagnation = 0;
    double stagnation_term = 0;
    double alpha_used = 1;
    double beta_used = 1;
    double core = 0;
    CoreFlags flags;
};

// Share of repeated n-grams in the table. Empty when the table has no
// occurrences.
std::optional<double> repeated_fraction(const NgramTable& table, RepetitionMode mode = RepetitionMode::occurrences);

// The three factors combined: entropy_term * (1 - r)^alpha * clamp(1 - s, 0, 1)^beta.
// Exposed separately so the shaping can be checked without a corpus.
CoreBreakdown combine_factors(double entropy_term, std::optional<double> repetition_ratio,
                              std::optional<double> raw_stagnation, double alpha, double beta);

struct Exponents {
    double alpha = 1;
    double beta = 1;
    std::optional<FitResult> zipf;   // present when fitted successfully
    std::optional<FitResult> heaps;
    bool fallback = false;
};

// alpha/beta per the config: fitted on this corpus or taken verbatim.
Exponents resolve_exponents(const Corpus& corpus, const CoreConfig& config);

struct DialogCore {
    std::string dialog_id;
    Condition condition = Condition::neutral;
    CoreBreakdown breakdown;
};

struct CoreAnalysis {
    CoreBreakdown corpus;
    ModeAssignment assignment;
    Exponents exponents;
    std::vector<DialogCore> per_dialog;
};

CoreBreakdown compute_core(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config);

// Per-dialog scores that reuse the corpus-level mode assignment and exponents.
std::vector<DialogCore> core_per_dialog(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config,
                                        const ModeAssignment& corpus_assignment, const Exponents& exponents);

// Corpus score, the assignment it used, and per-dialog scores in one pass.
CoreAnalysis analyze_core(const Corpus& corpus, const EmbeddingMatrix& matrix, const CoreConfig& config);

}  // namespace dialogcore
