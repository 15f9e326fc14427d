#include "dialogcore/behavior.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "builtin_lexicons.hpp"
#include "dialogcore/error.hpp"
#include "dialogcore/metric.hpp"
#include "dialogcore/parallel.hpp"

namespace dialogcore {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool skip_line(const std::string& line) { return line.empty() || line.front() == '#'; }

}  // namespace

std::string_view to_string(CueKind kind) {
    switch (kind) {
        case CueKind::agreement: return "agreement";
        case CueKind::disagreement: return "disagreement";
        case CueKind::hedging: return "hedging";
    }
    return "agreement";
}

CueLexicon::CueLexicon(CueKind kind, const std::vector<std::string>& phrases) : kind_(kind) {
    for (const auto& phrase : phrases) {
        auto tokens = tokenize(phrase);
        if (tokens.empty() || tokens.size() > max_phrase_tokens)
            throw ValidationError(std::string(to_string(kind)) + " lexicon: phrase '" + phrase +
                                  "' must tokenize to 1-3 tokens");
        phrases_.insert(std::move(tokens));
    }
    if (phrases_.empty()) throw ValidationError(std::string(to_string(kind)) + " lexicon is empty");
}

CueLexicon CueLexicon::parse(CueKind kind, std::istream& in) {
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!skip_line(line)) phrases.push_back(line);
    }
    return CueLexicon(kind, phrases);
}

CueLexicon CueLexicon::builtin(CueKind kind) {
    const char* text = kind == CueKind::agreement      ? builtin::agreement
                       : kind == CueKind::disagreement ? builtin::disagreement
                                                       : builtin::hedging;
    std::istringstream in(text);
    return parse(kind, in);
}

std::size_t count_cue_matches(std::span<const std::string> tokens, const CueLexicon& lexicon) {
    std::size_t matches = 0;
    std::size_t i = 0;
    std::vector<std::string> probe;
    while (i < tokens.size()) {
        std::size_t matched = 0;
        for (std::size_t len = std::min(CueLexicon::max_phrase_tokens, tokens.size() - i); len >= 1; --len) {
            probe.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                         tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
            if (lexicon.phrases().count(probe)) {
                matched = len;
                break;
            }
        }
        if (matched) {
            ++matches;
            i += matched;
        } else {
            ++i;
        }
    }
    return matches;
}

double cue_rate(std::span<const std::string> tokens, const CueLexicon& lexicon) {
    if (tokens.empty()) throw ValidationError("cue rate of an empty token stream is undefined");
    return static_cast<double>(count_cue_matches(tokens, lexicon)) / static_cast<double>(tokens.size());
}

RepetitionRate repetition_rate(std::span<const std::string> tokens, std::size_t n) {
    if (n < 1) throw ValidationError("n-gram order must be >= 1");
    if (tokens.size() < n) return {0.0, true};
    return {repeated_fraction(count_ngrams(tokens, n)).value_or(0.0), false};
}

SentimentLexicon::SentimentLexicon(std::map<std::string, double> polarity) : polarity_(std::move(polarity)) {
    for (const auto& [word, value] : polarity_) {
        if (!(value >= -1.0 && value <= 1.0))
            throw ValidationError("sentiment lexicon: polarity of '" + word + "' is outside [-1, 1]");
    }
}

SentimentLexicon SentimentLexicon::parse(std::istream& in) {
    std::map<std::string, double> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (skip_line(line)) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ValidationError("sentiment lexicon line " + std::to_string(line_no) + ": expected word<TAB>polarity");
        const auto word = tokenize(line.substr(0, tab));
        if (word.size() != 1)
            throw ValidationError("sentiment lexicon line " + std::to_string(line_no) + ": entry must be one word");
        const auto value_text = trim(line.substr(tab + 1));
        double value = 0;
        auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{} || ptr != value_text.data() + value_text.size())
            throw ValidationError("sentiment lexicon line " + std::to_string(line_no) + ": bad polarity '" +
                                  value_text + "'");
        entries[word.front()] = value;
    }
    return SentimentLexicon(std::move(entries));
}

SentimentLexicon SentimentLexicon::builtin() {
    std::istringstream in(builtin::sentiment);
    return parse(in);
}

std::optional<double> SentimentLexicon::lookup(const std::string& word) const {
    if (auto it = polarity_.find(word); it != polarity_.end()) return it->second;
    return std::nullopt;
}

double sentiment(std::string_view text, const SentimentLexicon& lexicon) {
    double sum = 0;
    std::size_t matched = 0;
    for (const auto& token : tokenize(text)) {
        if (auto p = lexicon.lookup(token)) {
            sum += *p;
            ++matched;
        }
    }
    return matched ? std::clamp(sum / static_cast<double>(matched), -1.0, 1.0) : 0.0;
}

ToxicityClient::ToxicityClient(std::string endpoint, http::RetryPolicy retry, std::size_t batch_size)
    : url_(http::Url::parse(endpoint)), retry_(retry), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<double> ToxicityClient::score(const std::vector<std::string>& texts) const {
    std::vector<double> scores;
    scores.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += batch_size_) {
        const std::size_t end = std::min(texts.size(), begin + batch_size_);
        nlohmann::json body;
        body["texts"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                                 texts.begin() + static_cast<std::ptrdiff_t>(end));
        const auto response = http::post_json_with_retries(url_, body.dump(), retry_, "toxicity request");
        if (response.status < 200 || response.status >= 300)
            throw ServiceError("toxicity request returned HTTP " + std::to_string(response.status));
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(response.body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ServiceError(std::string("toxicity response is not JSON: ") + e.what());
        }
        if (!reply.is_object() || !reply.contains("scores") || !reply["scores"].is_array())
            throw ServiceError("toxicity response lacks a \"scores\" array");
        const auto& got = reply["scores"];
        if (got.size() != end - begin)
            throw ServiceError("toxicity response has " + std::to_string(got.size()) + " scores for " +
                               std::to_string(end - begin) + " texts");
        for (const auto& s : got) {
            if (!s.is_number()) throw ServiceError("toxicity score is not a number");
            const double v = s.get<double>();
            if (!(v >= 0.0 && v <= 1.0))
                throw ServiceError("toxicity score " + std::to_string(v) + " is outside [0, 1]");
            scores.push_back(v);
        }
    }
    return scores;
}

double ToxicityClient::score(const std::string& text) const { return score(std::vector<std::string>{text}).front(); }

BehaviorLexicons BehaviorLexicons::from_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ValidationError("lexicon directory '" + dir + "' does not exist");
    BehaviorLexicons lex;
    auto load_cues = [&](const char* name, CueKind kind, CueLexicon& target) {
        const auto path = fs::path(dir) / name;
        if (!fs::exists(path)) return;
        std::ifstream in(path);
        target = CueLexicon::parse(kind, in);
    };
    load_cues("agreement.txt", CueKind::agreement, lex.agreement);
    load_cues("disagreement.txt", CueKind::disagreement, lex.disagreement);
    load_cues("hedging.txt", CueKind::hedging, lex.hedging);
    if (const auto path = fs::path(dir) / "sentiment.tsv"; fs::exists(path)) {
        std::ifstream in(path);
        lex.sentiment = SentimentLexicon::parse(in);
    }
    return lex;
}

std::vector<BehaviorProfile> behavior_profiles(const Corpus& corpus, const BehaviorLexicons& lexicons,
                                               const BehaviorOptions& options, const ToxicityClient* toxicity) {
    std::vector<BehaviorProfile> out(corpus.size());
    std::vector<std::string> texts(corpus.size());
    parallel_for(corpus.size(), options.threads, [&](std::size_t d) {
        const auto& dialog = corpus.dialogs()[d];
        const auto& tokens = corpus.dialog_tokens(d);
        auto& p = out[d];
        p.dialog_id = dialog.id;
        p.condition = dialog.condition;
        for (const auto& u : dialog.utterances) {
            if (!texts[d].empty()) texts[d].push_back('\n');
            texts[d] += u.text;
        }
        const auto rep = repetition_rate(tokens, options.ngram_n);
        p.repetition_rate = rep.value;
        p.repetition_too_short = rep.too_short;
        if (!tokens.empty()) {
            p.agreement_rate = cue_rate(tokens, lexicons.agreement);
            p.disagreement_rate = cue_rate(tokens, lexicons.disagreement);
            p.hedging_rate = cue_rate(tokens, lexicons.hedging);
        }
        p.sentiment = sentiment(texts[d], lexicons.sentiment);
    });
    if (toxicity && !texts.empty()) {
        const auto scores = toxicity->score(texts);
        for (std::size_t d = 0; d < out.size(); ++d) out[d].toxicity = scores[d];
    }
    return out;
}

}  // namespace dialogcore
