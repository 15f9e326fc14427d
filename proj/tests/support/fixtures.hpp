#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dialogcore/corpus.hpp"
#include "dialogcore/embedding.hpp"

namespace testing {

using dialogcore::Agent;
using dialogcore::Condition;
using dialogcore::Corpus;
using dialogcore::Dialog;

inline Dialog make_dialog(const std::string& id, const std::vector<std::string>& texts,
                          Condition condition = Condition::neutral, const std::string& agent_a = "ma",
                          const std::string& agent_b = "mb") {
    Dialog d;
    d.id = id;
    d.condition = condition;
    d.agent_a = agent_a;
    d.agent_b = agent_b;
    for (std::size_t t = 0; t < texts.size(); ++t)
        d.utterances.push_back({id, t, t % 2 == 0 ? Agent::A : Agent::B, texts[t]});
    return d;
}

inline Corpus make_corpus(const std::vector<std::vector<std::string>>& dialogs) {
    std::vector<Dialog> out;
    for (std::size_t i = 0; i < dialogs.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "d%03zu", i);
        out.push_back(make_dialog(id, dialogs[i]));
    }
    return Corpus(std::move(out));
}

// Random corpus over a small alphabet so repeats are common.
inline Corpus random_corpus(std::mt19937_64& rng, std::size_t max_dialogs, std::size_t max_turns,
                            std::size_t max_words, std::size_t alphabet) {
    std::uniform_int_distribution<std::size_t> nd(1, max_dialogs), nt(1, max_turns), nw(1, max_words),
        letter(0, alphabet - 1);
    std::vector<std::vector<std::string>> dialogs(nd(rng));
    for (auto& turns : dialogs) {
        turns.resize(nt(rng));
        for (auto& text : turns) {
            const auto words = nw(rng);
            for (std::size_t w = 0; w < words; ++w) {
                if (w) text += ' ';
                text += static_cast<char>('a' + letter(rng));
            }
        }
    }
    return make_corpus(dialogs);
}

// Naive sliding-window counter: n-grams as space-joined strings.
inline std::map<std::string, std::size_t> naive_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (std::size_t j = 0; j < n; ++j) key += (j ? " " : "") + tokens[i + j];
        ++counts[key];
    }
    return counts;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
  public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("dialogcore-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};


// Adjusted Rand index from the contingency table.
inline double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ca[a[i]] += 1;
        cb[b[i]] += 1;
    }
    auto pairs = [](double n) { return n * (n - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [k, n] : joint) index += pairs(n);
    for (const auto& [k, n] : ca) sa += pairs(n);
    for (const auto& [k, n] : cb) sb += pairs(n);
    const double expected = sa * sb / pairs(double(a.size()));
    const double max_index = (sa + sb) / 2;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

struct Blobs {
    dialogcore::EmbeddingMatrix matrix;
    std::vector<std::size_t> truth;
};

// `per_blob` Gaussian points around each of `centers`.
inline Blobs gaussian_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double sigma,
                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    const std::size_t dim = centers.front().size();
    std::vector<dialogcore::UtteranceKey> keys;
    std::vector<double> values;
    Blobs out;
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (std::size_t i = 0; i < per_blob; ++i) {
            keys.push_back({"blob", keys.size()});
            for (std::size_t d = 0; d < dim; ++d) values.push_back(centers[c][d] + noise(rng));
            out.truth.push_back(c);
        }
    out.matrix = dialogcore::EmbeddingMatrix(dim, std::move(keys), std::move(values));
    return out;
}

inline dialogcore::EmbeddingMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
    std::vector<dialogcore::UtteranceKey> keys;
    std::vector<double> values;
    for (const auto& r : rows) {
        keys.push_back({"m", keys.size()});
        values.insert(values.end(), r.begin(), r.end());
    }
    return dialogcore::EmbeddingMatrix(rows.front().size(), std::move(keys), std::move(values));
}

}  // namespace testing
