#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dialogcore {

enum class Condition { cooperative, competitive, neutral };
enum class Agent { A, B };

std::string_view to_string(Condition condition);
std::string_view to_string(Agent agent);
// Throws ValidationError for anything other than the three condition names.
Condition parse_condition(std::string_view text);

struct Utterance {
    std::string dialog_id;
    std::size_t turn_index = 0;
    Agent agent = Agent::A;
    std::string text;
};

struct Dialog {
    std::string id;
    Condition condition = Condition::neutral;
    std::string agent_a;
    std::string agent_b;
    std::vector<Utterance> utterances;
};

// Checks the per-dialog invariants: at least one turn, contiguous turn indices
// from 0, strict A/B alternation starting with A, non-blank text.
void validate_dialog(const Dialog& dialog);

/// An immutable, validated set of dialogs.
///
/// Dialogs are kept sorted by id and their utterances by turn index, so every
/// traversal (token streams, embedding rows, cluster labels) shares one order.
/// Each dialog's token stream is computed once at construction.
class Corpus {
  public:
    Corpus() = default;
    // Validates every dialog and rejects duplicate ids.
    explicit Corpus(std::vector<Dialog> dialogs);

    const std::vector<Dialog>& dialogs() const { return dialogs_; }
    std::size_t size() const { return dialogs_.size(); }
    bool empty() const { return dialogs_.empty(); }

    std::size_t utterance_count() const { return utterance_count_; }
    std::size_t token_count() const { return token_count_; }

    // Concatenated tokens of all utterances of dialog i, in turn order.
    const std::vector<std::string>& dialog_tokens(std::size_t i) const { return dialog_tokens_[i]; }

    // Position of dialog i's first utterance in corpus iteration order.
    std::size_t first_utterance_offset(std::size_t i) const { return utterance_offsets_[i]; }

  private:
    std::vector<Dialog> dialogs_;
    std::vector<std::vector<std::string>> dialog_tokens_;
    std::vector<std::size_t> utterance_offsets_;
    std::size_t utterance_count_ = 0;
    std::size_t token_count_ = 0;
};

// Parses dialog JSONL, one dialog per line. Blank lines are skipped. Errors are
// reported as ValidationError with the 1-based line number and offending field.
Corpus parse_corpus(std::istream& in, std::string_view source_name = "<input>");
Corpus parse_corpus_file(const std::string& path);

// One JSONL line (without trailing newline) with keys in schema order.
std::string dialog_to_jsonl(const Dialog& dialog);

// Lowercases, then returns the maximal runs of word characters (Unicode letters
// and digits plus '_'). Same contract as re.findall(r"\b\w+\b", text.lower()).
std::vector<std::string> tokenize(std::string_view text);

using Ngram = std::vector<std::string>;

struct NgramTable {
    std::size_t n = 1;
    std::map<Ngram, std::size_t> counts;
    std::size_t total_occurrences = 0;
};

// Sliding windows over a single token stream.
NgramTable count_ngrams(std::span<const std::string> tokens, std::size_t n);
// Windows per dialog over its concatenated tokens; never across dialogs.
NgramTable extract_ngrams(const Corpus& corpus, std::size_t n);

struct TokenCount {
    std::string token;
    std::size_t count = 0;
};

// Sorted by count descending, ties by token ascending; rank of entries[k] is k+1.
struct TokenStats {
    std::vector<TokenCount> entries;
    std::size_t total_tokens = 0;
};

TokenStats rank_frequency(const Corpus& corpus);
TokenStats rank_frequency(std::span<const std::string> tokens);

struct VocabPoint {
    std::size_t n = 0;  // tokens seen
    std::size_t v = 0;  // distinct types seen
};

struct VocabGrowthCurve {
    std::vector<VocabPoint> points;
};

// Records (n, v) at every stride-th token and at the final token.
VocabGrowthCurve vocab_growth(const Corpus& corpus, std::size_t stride);
VocabGrowthCurve vocab_growth(std::span<const std::string> tokens, std::size_t stride);

struct TfidfMatrix {
    std::vector<std::string> dialog_ids;
    std::vector<std::string> vocabulary;
    std::vector<std::vector<double>> rows;  // dialogs x vocabulary
};

// Raw term counts times smoothed idf ln((1+D)/(1+df)) + 1, rows L2-normalized.
// The vocabulary is the max_features most frequent tokens corpus-wide.
TfidfMatrix tfidf_features(const Corpus& corpus, std::size_t max_features);
// Header `dialog_id,f0,...,f{k-1}`.
void write_tfidf_csv(const TfidfMatrix& matrix, std::ostream& out);

}  // namespace dialogcore
