#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialogcore/corpus.hpp"
#include "dialogcore/http.hpp"

namespace dialogcore {

enum class CueKind { agreement, disagreement, hedging };

std::string_view to_string(CueKind kind);

/// A set of cue phrases of 1 to 3 tokens, stored pre-tokenized.
class CueLexicon {
  public:
    static constexpr std::size_t max_phrase_tokens = 3;

    // Each phrase is run through tokenize(); phrases that tokenize to nothing
    // or to more than 3 tokens are rejected, as is an empty set.
    CueLexicon(CueKind kind, const std::vector<std::string>& phrases);

    CueKind kind() const { return kind_; }
    const std::set<std::vector<std::string>>& phrases() const { return phrases_; }

    // One phrase per line; blank lines and lines starting with '#' are ignored.
    static CueLexicon parse(CueKind kind, std::istream& in);
    static CueLexicon builtin(CueKind kind);

  private:
    CueKind kind_;
    std::set<std::vector<std::string>> phrases_;
};

// Number of non-overlapping phrase matches (longest first, left to right).
std::size_t count_cue_matches(std::span<const std::string> tokens, const CueLexicon& lexicon);
// Matches divided by token count. Throws ValidationError for an empty stream.
double cue_rate(std::span<const std::string> tokens, const CueLexicon& lexicon);

struct RepetitionRate {
    double value = 0;
    bool too_short = false;  // fewer tokens than n; value is 0
};

// Occurrence share of repeated n-grams within one token stream.
RepetitionRate repetition_rate(std::span<const std::string> tokens, std::size_t n);

/// word -> polarity in [-1, 1].
class SentimentLexicon {
  public:
    explicit SentimentLexicon(std::map<std::string, double> polarity);

    // `word<TAB>polarity` per line; '#' comments and blank lines ignored.
    static SentimentLexicon parse(std::istream& in);
    static SentimentLexicon builtin();

    const std::map<std::string, double>& entries() const { return polarity_; }
    std::optional<double> lookup(const std::string& word) const;

  private:
    std::map<std::string, double> polarity_;
};

// Mean polarity of lexicon words found in the text; 0 when none match.
double sentiment(std::string_view text, const SentimentLexicon& lexicon);

/// Client for a toxicity classifier speaking
/// POST {"texts": [...]} -> {"scores": [0..1, ...]}.
class ToxicityClient {
  public:
    explicit ToxicityClient(std::string endpoint, http::RetryPolicy retry = {}, std::size_t batch_size = 16);

    // Scores in input order. Throws ServiceError on transport failure, a
    // length mismatch, or any score outside [0, 1].
    std::vector<double> score(const std::vector<std::string>& texts) const;
    double score(const std::string& text) const;

  private:
    http::Url url_;
    http::RetryPolicy retry_;
    std::size_t batch_size_;
};

struct BehaviorLexicons {
    CueLexicon agreement = CueLexicon::builtin(CueKind::agreement);
    CueLexicon disagreement = CueLexicon::builtin(CueKind::disagreement);
    CueLexicon hedging = CueLexicon::builtin(CueKind::hedging);
    SentimentLexicon sentiment = SentimentLexicon::builtin();

    // Loads agreement.txt, disagreement.txt, hedging.txt and sentiment.tsv from
    // a directory. Missing files keep the builtin defaults.
    static BehaviorLexicons from_directory(const std::string& dir);
};

struct BehaviorProfile {
    std::string dialog_id;
    Condition condition = Condition::neutral;
    double repetition_rate = 0;
    bool repetition_too_short = false;
    double agreement_rate = 0;
    double disagreement_rate = 0;
    double hedging_rate = 0;
    double sentiment = 0;
    std::optional<double> toxicity;
};

struct BehaviorOptions {
    std::size_t ngram_n = 3;
    int threads = 1;
};

// One profile per dialog, over the dialog's concatenated turns. Toxicity is
// filled only when a client is supplied.
std::vector<BehaviorProfile> behavior_profiles(const Corpus& corpus, const BehaviorLexicons& lexicons,
                                               const BehaviorOptions& options,
                                               const ToxicityClient* toxicity = nullptr);

}  // namespace dialogcore
