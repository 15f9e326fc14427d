#include "dialogcore/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "dialogcore/error.hpp"
#include "dialogcore/parallel.hpp"

namespace dialogcore {

namespace {

std::string describe(const UtteranceKey& key) {
    return "(" + key.dialog_id + ", " + std::to_string(key.turn_index) + ")";
}

std::vector<UtteranceKey> corpus_keys(const Corpus& corpus) {
    std::vector<UtteranceKey> keys;
    keys.reserve(corpus.utterance_count());
    for (const auto& d : corpus.dialogs())
        for (const auto& u : d.utterances) keys.push_back({d.id, u.turn_index});
    return keys;
}

std::vector<double> parse_vector(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ValidationError(where + ": vector must be a non-empty array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw ValidationError(where + ": vector contains a non-number");
        const double v = x.get<double>();
        if (!std::isfinite(v)) throw ValidationError(where + ": vector contains a non-finite value");
        out.push_back(v);
    }
    return out;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<UtteranceKey> keys, std::vector<double> values)
    : dim_(dim), keys_(std::move(keys)), values_(std::move(values)) {
    if (dim_ < 1) throw ValidationError("embedding dimension must be >= 1");
    if (values_.size() != keys_.size() * dim_) throw ValidationError("embedding values do not match rows x dim");
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        double norm2 = 0;
        for (double x : row(i)) {
            if (!std::isfinite(x)) throw ValidationError("non-finite embedding value at " + describe(keys_[i]));
            norm2 += x * x;
        }
        if (norm2 == 0) throw ValidationError("zero-norm embedding at " + describe(keys_[i]));
    }
}

EmbeddingMatrix load_embeddings(std::istream& in, const Corpus& corpus, std::string_view source_name) {
    std::map<UtteranceKey, std::vector<double>> by_key;
    std::optional<std::size_t> dim;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = std::string(source_name) + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(where + ": invalid JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("dialog_id") || !j["dialog_id"].is_string() || !j.contains("turn_index") ||
            !j["turn_index"].is_number_unsigned() || !j.contains("vector"))
            throw ValidationError(where + ": expected {\"dialog_id\": str, \"turn_index\": int, \"vector\": [...]}");
        UtteranceKey key{j["dialog_id"].get<std::string>(), j["turn_index"].get<std::size_t>()};
        auto vec = parse_vector(j["vector"], where);
        if (!dim) dim = vec.size();
        if (vec.size() != *dim)
            throw ValidationError(where + ": dimension mismatch (" + std::to_string(vec.size()) + " vs " +
                                  std::to_string(*dim) + ")");
        if (!by_key.emplace(key, std::move(vec)).second)
            throw ValidationError(where + ": duplicate embedding key " + describe(key));
    }

    auto keys = corpus_keys(corpus);
    if (keys.empty()) throw ValidationError("cannot align embeddings to an empty corpus");
    if (!dim) throw ValidationError(std::string(source_name) + ": no embedding rows");
    std::vector<double> values;
    values.reserve(keys.size() * *dim);
    for (const auto& key : keys) {
        auto it = by_key.find(key);
        if (it == by_key.end())
            throw ValidationError(std::string(source_name) + ": missing embedding for utterance " + describe(key));
        values.insert(values.end(), it->second.begin(), it->second.end());
        by_key.erase(it);
    }
    if (!by_key.empty())
        throw ValidationError(std::string(source_name) + ": embedding for unknown utterance " +
                              describe(by_key.begin()->first));
    return EmbeddingMatrix(*dim, std::move(keys), std::move(values));
}

EmbeddingMatrix load_embeddings_file(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open embeddings file '" + path + "'");
    return load_embeddings(in, corpus, path);
}

void save_embeddings(const EmbeddingMatrix& matrix, std::ostream& out) {
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        nlohmann::ordered_json j;
        j["dialog_id"] = matrix.keys()[i].dialog_id;
        j["turn_index"] = matrix.keys()[i].turn_index;
        auto row = matrix.row(i);
        j["vector"] = std::vector<double>(row.begin(), row.end());
        out << j.dump() << '\n';
    }
}

EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const Corpus& corpus,
                                 const EmbeddingServiceOptions& options) {
    if (options.batch_size < 1) throw ValidationError("embedding batch size must be >= 1");
    const auto url = http::Url::parse(endpoint);
    auto keys = corpus_keys(corpus);
    if (keys.empty()) throw ValidationError("cannot embed an empty corpus");

    std::vector<const std::string*> texts;
    texts.reserve(keys.size());
    for (const auto& d : corpus.dialogs())
        for (const auto& u : d.utterances) texts.push_back(&u.text);

    const std::size_t batches = (texts.size() + options.batch_size - 1) / options.batch_size;
    std::vector<std::vector<std::vector<double>>> results(batches);

    parallel_for(batches, options.max_inflight, [&](std::size_t b) {
        const std::size_t begin = b * options.batch_size;
        const std::size_t end = std::min(texts.size(), begin + options.batch_size);
        nlohmann::json body;
        body["input"] = nlohmann::json::array();
        for (std::size_t i = begin; i < end; ++i) body["input"].push_back(*texts[i]);
        if (options.model) body["model"] = *options.model;

        const auto what = "embedding request (batch " + std::to_string(b) + ")";
        const auto response = http::post_json_with_retries(url, body.dump(), options.retry, what);
        if (response.status < 200 || response.status >= 300)
            throw ServiceError(what + " returned HTTP " + std::to_string(response.status));

        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(response.body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ServiceError(what + ": response is not JSON: " + e.what());
        }
        if (!reply.is_object() || !reply.contains("data") || !reply["data"].is_array())
            throw ServiceError(what + ": response lacks a \"data\" array");

        auto& rows = results[b];
        rows.assign(end - begin, {});
        for (const auto& item : reply["data"]) {
            if (!item.is_object() || !item.contains("index") || !item["index"].is_number_unsigned() ||
                !item.contains("embedding"))
                throw ServiceError(what + ": malformed data item");
            const auto index = item["index"].get<std::size_t>();
            if (index >= rows.size()) throw ServiceError(what + ": index " + std::to_string(index) + " out of range");
            if (!rows[index].empty()) throw ServiceError(what + ": duplicate index " + std::to_string(index));
            try {
                rows[index] = parse_vector(item["embedding"], what);
            } catch (const ValidationError& e) {
                throw ServiceError(e.what());
            }
        }
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].empty()) throw ServiceError(what + ": no embedding for index " + std::to_string(i));
    });

    const std::size_t dim = results.front().front().size();
    std::vector<double> values;
    values.reserve(keys.size() * dim);
    for (std::size_t b = 0; b < batches; ++b) {
        for (const auto& row : results[b]) {
            if (row.size() != dim)
                throw ServiceError("embedding dimension inconsistent across responses (" + std::to_string(row.size()) +
                                   " vs " + std::to_string(dim) + ")");
            values.insert(values.end(), row.begin(), row.end());
        }
    }
    try {
        return EmbeddingMatrix(dim, std::move(keys), std::move(values));
    } catch (const ValidationError& e) {
        throw ServiceError(std::string("embedding service returned an unusable vector: ") + e.what());
    }
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                              std::to_string(v.size()) + ")");
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0 || nv == 0) throw ValidationError("cosine: zero-norm vector");
    // sqrt(nu * nv) rather than sqrt(nu) * sqrt(nv): for u == v it is exactly nu.
    return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

std::optional<double> dialog_stagnation(std::span<const std::span<const double>> rows) {
    if (rows.size() < 2) return std::nullopt;
    double sum = 0;
    for (std::size_t j = 0; j + 1 < rows.size(); ++j) sum += cosine(rows[j], rows[j + 1]);
    return sum / static_cast<double>(rows.size() - 1);
}

std::vector<std::span<const double>> dialog_rows(const EmbeddingMatrix& matrix, const Corpus& corpus, std::size_t i) {
    const auto first = corpus.first_utterance_offset(i);
    const auto count = corpus.dialogs()[i].utterances.size();
    if (first + count > matrix.rows()) throw ValidationError("embedding matrix is not aligned to the corpus");
    std::vector<std::span<const double>> rows;
    rows.reserve(count);
    for (std::size_t r = 0; r < count; ++r) rows.push_back(matrix.row(first + r));
    return rows;
}

}  // namespace dialogcore
