#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "influence/core.hpp"
#include "influence/embedding.hpp"

namespace influence {

/// Id-indexed documents with embeddings, immutable once built.
class Corpus {
public:
    Corpus() = default;
    /// Embeds any document that arrives without a vector.
    Corpus(std::string dataset, std::vector<Document> documents, Embedder& embedder);
    /// Documents must already carry embeddings of equal dimension.
    Corpus(std::string dataset, std::string embedder_id, std::vector<Document> documents);

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const std::string& dataset() const noexcept { return dataset_; }
    const std::string& embedder_id() const noexcept { return embedder_id_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }
    const Document* find(const std::string& id) const;

    /// Writes `<stem>.jsonl` ({"id","text","embedding"} per line) and
    /// `<stem>.manifest.json` ({dataset, embedder, dimension}).
    void save(const std::filesystem::path& jsonl_path) const;
    static Corpus load(const std::filesystem::path& jsonl_path);

    static std::filesystem::path manifest_path(const std::filesystem::path& jsonl_path);

private:
    void check_invariants();

    std::string dataset_;
    std::string embedder_id_;
    std::size_t dimension_ = 0;
    std::vector<Document> documents_;
};

/// Top-k documents by descending cosine to the query embedding; equal scores
/// fall back to ascending id.
RetrievedSet retrieve(const Corpus& corpus, const Query& query, std::size_t k, Embedder& embedder);

/// Augmented prompt, one line per part:
///
///   Answer the question using the context below.
///   Context [1]: <doc 1 text>
///   ...
///   Question: <query text>
///   Answer:
///
/// With no documents only the last two lines remain.
std::string build_prompt(const Query& query, std::span<const Document> docs_in_context);

// ---------------------------------------------------------------------------

struct DatasetRecord {
    Query query;
    std::vector<Document> provided_documents;
    std::string gold_answer;

    RetrievedSet retrieved() const { return {query.id, provided_documents}; }
    bool operator==(const DatasetRecord&) const = default;
};

struct IngestDiagnostic {
    std::size_t line = 0;
    std::string message;
};

struct IngestResult {
    std::vector<DatasetRecord> records;
    std::vector<IngestDiagnostic> diagnostics;
};

struct IngestOptions {
    std::string format = "jsonl";
    /// Documents each record must carry; 0 accepts any non-zero count.
    std::size_t expected_documents = 5;
};

/// Reads JSONL rows {"id", "question", "answer", "documents": [{"id", "text"}, ...]}
/// plus an optional "incorrect_answer". Malformed rows are skipped and
/// reported with their 1-based line number.
IngestResult ingest(const std::filesystem::path& path, const IngestOptions& options = {});

/// Parses one row; throws DomainError describing the first problem.
DatasetRecord parse_record(const nlohmann::json& row, std::size_t expected_documents);
nlohmann::json record_to_json(const DatasetRecord& record);

}  // namespace influence
