#include "dialogcore/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include "dialogcore/csv.hpp"
#include "dialogcore/error.hpp"
#include "dialogcore/numfmt.hpp"

namespace dialogcore {

namespace {

bool is_blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

bool is_word_char(UChar32 c) {
    if (c == U'_' || u_isalnum(c)) return true;
    const auto type = static_cast<UCharCategory>(u_charType(c));
    return type == U_LETTER_NUMBER || type == U_OTHER_NUMBER;
}

[[noreturn]] void fail_at(std::string_view source, std::size_t line, std::string_view field,
                          const std::string& message) {
    throw ValidationError(std::string(source) + ":" + std::to_string(line) + ": field '" + std::string(field) +
                          "': " + message);
}

}  // namespace

std::string_view to_string(Condition condition) {
    switch (condition) {
        case Condition::cooperative: return "cooperative";
        case Condition::competitive: return "competitive";
        case Condition::neutral: return "neutral";
    }
    return "neutral";
}

std::string_view to_string(Agent agent) { return agent == Agent::A ? "A" : "B"; }

Condition parse_condition(std::string_view text) {
    if (text == "cooperative") return Condition::cooperative;
    if (text == "competitive") return Condition::competitive;
    if (text == "neutral") return Condition::neutral;
    throw ValidationError("unknown condition '" + std::string(text) +
                          "' (expected cooperative, competitive or neutral)");
}

void validate_dialog(const Dialog& dialog) {
    if (dialog.id.empty()) throw ValidationError("dialog id must be non-empty");
    if (dialog.utterances.empty()) throw ValidationError("dialog '" + dialog.id + "' has no turns");
    for (std::size_t i = 0; i < dialog.utterances.size(); ++i) {
        const auto& u = dialog.utterances[i];
        const auto where = "dialog '" + dialog.id + "' turn " + std::to_string(i);
        if (u.turn_index != i) throw ValidationError(where + ": turn_index is not contiguous from 0");
        if (u.dialog_id != dialog.id) throw ValidationError(where + ": utterance belongs to '" + u.dialog_id + "'");
        const Agent expected = (i % 2 == 0) ? Agent::A : Agent::B;
        if (u.agent != expected)
            throw ValidationError(where + ": agents must alternate starting with A (expected " +
                                  std::string(to_string(expected)) + ")");
        if (is_blank(u.text)) throw ValidationError(where + ": text is empty");
    }
}

Corpus::Corpus(std::vector<Dialog> dialogs) : dialogs_(std::move(dialogs)) {
    for (auto& d : dialogs_) {
        std::sort(d.utterances.begin(), d.utterances.end(),
                  [](const Utterance& a, const Utterance& b) { return a.turn_index < b.turn_index; });
        validate_dialog(d);
    }
    std::sort(dialogs_.begin(), dialogs_.end(), [](const Dialog& a, const Dialog& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < dialogs_.size(); ++i) {
        if (dialogs_[i].id == dialogs_[i - 1].id) throw ValidationError("duplicate dialog id '" + dialogs_[i].id + "'");
    }

    dialog_tokens_.reserve(dialogs_.size());
    utterance_offsets_.reserve(dialogs_.size());
    for (const auto& d : dialogs_) {
        utterance_offsets_.push_back(utterance_count_);
        utterance_count_ += d.utterances.size();
        std::vector<std::string> tokens;
        for (const auto& u : d.utterances) {
            auto more = tokenize(u.text);
            tokens.insert(tokens.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
        }
        token_count_ += tokens.size();
        dialog_tokens_.push_back(std::move(tokens));
    }
}

Corpus parse_corpus(std::istream& in, std::string_view source_name) {
    std::vector<Dialog> dialogs;
    std::unordered_map<std::string, std::size_t> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail_at(source_name, line_no, "<line>", std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail_at(source_name, line_no, "<line>", "expected a JSON object");

        auto get_string = [&](const char* field) -> std::string {
            auto it = j.find(field);
            if (it == j.end()) fail_at(source_name, line_no, field, "missing");
            if (!it->is_string()) fail_at(source_name, line_no, field, "expected a string");
            return it->get<std::string>();
        };

        Dialog d;
        d.id = get_string("id");
        if (d.id.empty()) fail_at(source_name, line_no, "id", "must be non-empty");
        if (auto [it, inserted] = seen_ids.emplace(d.id, line_no); !inserted)
            fail_at(source_name, line_no, "id",
                    "duplicate dialog id '" + d.id + "' (first seen on line " + std::to_string(it->second) + ")");
        const auto condition = get_string("condition");
        try {
            d.condition = parse_condition(condition);
        } catch (const ValidationError& e) {
            fail_at(source_name, line_no, "condition", e.what());
        }
        d.agent_a = get_string("agent_a");
        d.agent_b = get_string("agent_b");

        auto turns = j.find("turns");
        if (turns == j.end()) fail_at(source_name, line_no, "turns", "missing");
        if (!turns->is_array()) fail_at(source_name, line_no, "turns", "expected an array");
        if (turns->empty()) fail_at(source_name, line_no, "turns", "dialog has no turns");
        for (std::size_t t = 0; t < turns->size(); ++t) {
            const auto& turn = (*turns)[t];
            const auto field = "turns[" + std::to_string(t) + "]";
            if (!turn.is_object()) fail_at(source_name, line_no, field, "expected an object");
            auto agent = turn.find("agent");
            auto text = turn.find("text");
            if (agent == turn.end() || !agent->is_string())
                fail_at(source_name, line_no, field + ".agent", "missing or not a string");
            if (text == turn.end() || !text->is_string())
                fail_at(source_name, line_no, field + ".text", "missing or not a string");
            const auto agent_name = agent->get<std::string>();
            if (agent_name != "A" && agent_name != "B")
                fail_at(source_name, line_no, field + ".agent", "expected \"A\" or \"B\", got \"" + agent_name + "\"");
            const Agent who = agent_name == "A" ? Agent::A : Agent::B;
            const Agent expected = (t % 2 == 0) ? Agent::A : Agent::B;
            if (who != expected)
                fail_at(source_name, line_no, field + ".agent", "agents must alternate starting with A");
            auto body = text->get<std::string>();
            if (is_blank(body)) fail_at(source_name, line_no, field + ".text", "text is empty");
            d.utterances.push_back(Utterance{d.id, t, who, std::move(body)});
        }
        dialogs.push_back(std::move(d));
    }
    return Corpus(std::move(dialogs));
}

Corpus parse_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open corpus file '" + path + "'");
    return parse_corpus(in, path);
}

std::string dialog_to_jsonl(const Dialog& dialog) {
    nlohmann::ordered_json j;
    j["id"] = dialog.id;
    j["condition"] = to_string(dialog.condition);
    j["agent_a"] = dialog.agent_a;
    j["agent_b"] = dialog.agent_b;
    auto turns = nlohmann::ordered_json::array();
    for (const auto& u : dialog.utterances) {
        nlohmann::ordered_json t;
        t["agent"] = to_string(u.agent);
        t["text"] = u.text;
        turns.push_back(std::move(t));
    }
    j["turns"] = std::move(turns);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    if (text.empty()) return tokens;

    icu::UnicodeString lowered = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    lowered.toLower(icu::Locale::getRoot());

    const int32_t length = lowered.length();
    int32_t i = 0;
    while (i < length) {
        UChar32 c = lowered.char32At(i);
        if (!is_word_char(c)) {
            i = lowered.moveIndex32(i, 1);
            continue;
        }
        const int32_t start = i;
        while (i < length && is_word_char(lowered.char32At(i))) i = lowered.moveIndex32(i, 1);
        std::string token;
        lowered.tempSubStringBetween(start, i).toUTF8String(token);
        tokens.push_back(std::move(token));
    }
    return tokens;
}

NgramTable count_ngrams(std::span<const std::string> tokens, std::size_t n) {
    if (n < 1) throw ValidationError("n-gram order must be >= 1");
    NgramTable table;
    table.n = n;
    if (tokens.size() < n) return table;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++table.counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                             tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
        ++table.total_occurrences;
    }
    return table;
}

NgramTable extract_ngrams(const Corpus& corpus, std::size_t n) {
    if (n < 1) throw ValidationError("n-gram order must be >= 1");
    NgramTable table;
    table.n = n;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        auto part = count_ngrams(corpus.dialog_tokens(d), n);
        for (auto& [gram, count] : part.counts) table.counts[gram] += count;
        table.total_occurrences += part.total_occurrences;
    }
    return table;
}

namespace {

TokenStats sorted_stats(const std::unordered_map<std::string, std::size_t>& counts, std::size_t total) {
    TokenStats stats;
    stats.total_tokens = total;
    stats.entries.reserve(counts.size());
    for (const auto& [token, count] : counts) stats.entries.push_back({token, count});
    std::sort(stats.entries.begin(), stats.entries.end(), [](const TokenCount& a, const TokenCount& b) {
        return a.count != b.count ? a.count > b.count : a.token < b.token;
    });
    return stats;
}

}  // namespace

TokenStats rank_frequency(std::span<const std::string> tokens) {
    if (tokens.empty()) throw ValidationError("rank-frequency table requires at least one token");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    return sorted_stats(counts, tokens.size());
}

TokenStats rank_frequency(const Corpus& corpus) {
    if (corpus.token_count() == 0) throw ValidationError("rank-frequency table requires at least one token");
    std::unordered_map<std::string, std::size_t> counts;
    for (std::size_t d = 0; d < corpus.size(); ++d)
        for (const auto& t : corpus.dialog_tokens(d)) ++counts[t];
    return sorted_stats(counts, corpus.token_count());
}

namespace {

class GrowthRecorder {
  public:
    explicit GrowthRecorder(std::size_t stride) : stride_(stride) {
        if (stride < 1) throw ValidationError("vocabulary growth stride must be >= 1");
    }
    void add(const std::string& token) {
        seen_.insert(token);
        ++n_;
        if (n_ % stride_ == 0) curve_.points.push_back({n_, seen_.size()});
    }
    VocabGrowthCurve finish() && {
        if (n_ == 0) throw ValidationError("vocabulary growth requires at least one token");
        if (curve_.points.empty() || curve_.points.back().n != n_) curve_.points.push_back({n_, seen_.size()});
        return std::move(curve_);
    }

  private:
    std::size_t stride_;
    std::size_t n_ = 0;
    std::unordered_set<std::string> seen_;
    VocabGrowthCurve curve_;
};

}  // namespace

VocabGrowthCurve vocab_growth(std::span<const std::string> tokens, std::size_t stride) {
    GrowthRecorder recorder(stride);
    for (const auto& t : tokens) recorder.add(t);
    return std::move(recorder).finish();
}

VocabGrowthCurve vocab_growth(const Corpus& corpus, std::size_t stride) {
    GrowthRecorder recorder(stride);
    for (std::size_t d = 0; d < corpus.size(); ++d)
        for (const auto& t : corpus.dialog_tokens(d)) recorder.add(t);
    return std::move(recorder).finish();
}

TfidfMatrix tfidf_features(const Corpus& corpus, std::size_t max_features) {
    if (max_features < 1) throw ValidationError("max_features must be >= 1");
    if (corpus.token_count() == 0) throw ValidationError("TF-IDF features require a non-empty corpus");

    const auto stats = rank_frequency(corpus);
    TfidfMatrix m;
    const auto k = std::min(max_features, stats.entries.size());
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < k; ++i) {
        m.vocabulary.push_back(stats.entries[i].token);
        column.emplace(stats.entries[i].token, i);
    }

    const auto dialogs = corpus.size();
    std::vector<std::size_t> df(k, 0);
    m.rows.assign(dialogs, std::vector<double>(k, 0.0));
    for (std::size_t d = 0; d < dialogs; ++d) {
        m.dialog_ids.push_back(corpus.dialogs()[d].id);
        for (const auto& t : corpus.dialog_tokens(d)) {
            if (auto it = column.find(t); it != column.end()) m.rows[d][it->second] += 1.0;
        }
        for (std::size_t c = 0; c < k; ++c)
            if (m.rows[d][c] > 0) ++df[c];
    }
    for (auto& row : m.rows) {
        double norm2 = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double idf = std::log((1.0 + static_cast<double>(dialogs)) / (1.0 + static_cast<double>(df[c]))) + 1.0;
            row[c] *= idf;
            norm2 += row[c] * row[c];
        }
        if (norm2 > 0) {
            const double norm = std::sqrt(norm2);
            for (auto& x : row) x /= norm;
        }
    }
    return m;
}

void write_tfidf_csv(const TfidfMatrix& matrix, std::ostream& out) {
    csv::Row header{"dialog_id"};
    for (std::size_t c = 0; c < matrix.vocabulary.size(); ++c) header.push_back("f" + std::to_string(c));
    csv::write_row(out, header);
    for (std::size_t d = 0; d < matrix.rows.size(); ++d) {
        csv::Row row{matrix.dialog_ids[d]};
        for (double x : matrix.rows[d]) row.push_back(format_number(x));
        csv::write_row(out, row);
    }
}

}  // namespace dialogcore
