#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dialogcore/corpus.hpp"
#include "dialogcore/http.hpp"

namespace dialogcore {

struct UtteranceKey {
    std::string dialog_id;
    std::size_t turn_index = 0;

    auto operator<=>(const UtteranceKey&) const = default;
};

/// One embedding row per corpus utterance, in corpus iteration order.
///
/// Rows are stored contiguously at double precision. Construction rejects
/// ragged rows, non-finite values and zero-norm rows.
class EmbeddingMatrix {
  public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t dim, std::vector<UtteranceKey> keys, std::vector<double> values);

    std::size_t dim() const { return dim_; }
    std::size_t rows() const { return keys_.size(); }
    const std::vector<UtteranceKey>& keys() const { return keys_; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::size_t dim_ = 0;
    std::vector<UtteranceKey> keys_;
    std::vector<double> values_;
};

// Embedding JSONL: {"dialog_id": str, "turn_index": int, "vector": [numbers]}.
// Rows are matched to utterances by key, so file order does not matter.
EmbeddingMatrix load_embeddings(std::istream& in, const Corpus& corpus, std::string_view source_name = "<input>");
EmbeddingMatrix load_embeddings_file(const std::string& path, const Corpus& corpus);
// Writes shortest round-trip decimal representations, so a reload is bit-exact.
void save_embeddings(const EmbeddingMatrix& matrix, std::ostream& out);

struct EmbeddingServiceOptions {
    std::size_t batch_size = 32;
    std::optional<std::string> model;
    int max_inflight = 4;
    http::RetryPolicy retry;
};

// Sends utterance texts in batches to an OpenAI-embeddings-shaped endpoint:
// POST {"input": [...], "model": ...} -> {"data": [{"index", "embedding"}]}.
EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const Corpus& corpus,
                                 const EmbeddingServiceOptions& options = {});

// Throws ValidationError on dimension mismatch or a zero-norm argument.
// The result is clamped to [-1, 1].
double cosine(std::span<const double> u, std::span<const double> v);

// Mean cosine similarity over consecutive rows. Empty when fewer than 2 rows.
std::optional<double> dialog_stagnation(std::span<const std::span<const double>> rows);

// Rows of dialog i of the corpus the matrix is aligned to.
std::vector<std::span<const double>> dialog_rows(const EmbeddingMatrix& matrix, const Corpus& corpus, std::size_t i);

}  // namespace dialogcore
