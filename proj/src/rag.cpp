#include "influence/rag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

namespace influence {

Corpus::Corpus(std::string dataset, std::vector<Document> documents, Embedder& embedder)
    : dataset_(std::move(dataset)), embedder_id_(embedder.id()), documents_(std::move(documents)) {
    std::vector<std::string> texts;
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (!documents_[i].embedding) {
            texts.push_back(documents_[i].text);
            missing.push_back(i);
        }
    }
    if (!texts.empty()) {
        auto vectors = embedder.embed(texts);
        for (std::size_t j = 0; j < missing.size(); ++j) {
            documents_[missing[j]].embedding = std::move(vectors[j].values);
        }
    }
    check_invariants();
}

Corpus::Corpus(std::string dataset, std::string embedder_id, std::vector<Document> documents)
    : dataset_(std::move(dataset)), embedder_id_(std::move(embedder_id)), documents_(std::move(documents)) {
    check_invariants();
}

void Corpus::check_invariants() {
    std::set<std::string> ids;
    dimension_ = 0;
    for (const auto& doc : documents_) {
        if (doc.text.empty()) throw DomainError("corpus document '" + doc.id + "' has no text");
        if (!ids.insert(doc.id).second) throw DomainError("duplicate corpus id '" + doc.id + "'");
        if (!doc.embedding || doc.embedding->empty()) {
            throw DomainError("corpus document '" + doc.id + "' has no embedding");
        }
        if (dimension_ == 0) dimension_ = doc.embedding->size();
        if (doc.embedding->size() != dimension_) {
            throw DomainError("corpus document '" + doc.id + "' has embedding dimension " +
                              std::to_string(doc.embedding->size()) + ", expected " +
                              std::to_string(dimension_));
        }
    }
}

const Document* Corpus::find(const std::string& id) const {
    for (const auto& doc : documents_) {
        if (doc.id == id) return &doc;
    }
    return nullptr;
}

std::filesystem::path Corpus::manifest_path(const std::filesystem::path& jsonl_path) {
    auto p = jsonl_path;
    p.replace_extension(".manifest.json");
    return p;
}

void Corpus::save(const std::filesystem::path& jsonl_path) const {
    std::ofstream out(jsonl_path);
    if (!out) throw IoError("cannot write corpus " + jsonl_path.string());
    for (const auto& doc : documents_) {
        out << nlohmann::json{{"id", doc.id}, {"text", doc.text}, {"embedding", *doc.embedding}}.dump()
            << '\n';
    }
    std::ofstream manifest(manifest_path(jsonl_path));
    if (!manifest) throw IoError("cannot write corpus manifest for " + jsonl_path.string());
    manifest << nlohmann::json{{"dataset", dataset_}, {"embedder", embedder_id_}, {"dimension", dimension_}}
                    .dump(2)
             << '\n';
}

Corpus Corpus::load(const std::filesystem::path& jsonl_path) {
    std::ifstream manifest_in(manifest_path(jsonl_path));
    if (!manifest_in) throw IoError("missing corpus manifest " + manifest_path(jsonl_path).string());
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("corpus manifest is not valid JSON: ") + e.what());
    }

    std::ifstream in(jsonl_path);
    if (!in) throw IoError("cannot read corpus " + jsonl_path.string());
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto row = nlohmann::json::parse(line);
            Document doc;
            doc.id = row.at("id").get<std::string>();
            doc.text = row.at("text").get<std::string>();
            doc.embedding = row.at("embedding").get<std::vector<double>>();
            docs.push_back(std::move(doc));
        } catch (const nlohmann::json::exception& e) {
            throw DomainError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    Corpus corpus(manifest.value("dataset", ""), manifest.value("embedder", ""), std::move(docs));
    const auto declared = manifest.value("dimension", std::size_t{0});
    if (!corpus.empty() && declared != corpus.dimension()) {
        throw DomainError("corpus manifest declares dimension " + std::to_string(declared) +
                          " but vectors have " + std::to_string(corpus.dimension()));
    }
    return corpus;
}

RetrievedSet retrieve(const Corpus& corpus, const Query& query, std::size_t k, Embedder& embedder) {
    if (corpus.empty()) throw DomainError("cannot retrieve from an empty corpus");
    if (k < 1 || k > corpus.size()) {
        throw DomainError("k=" + std::to_string(k) + " outside [1, " + std::to_string(corpus.size()) + "]");
    }
    const auto q = embedder.embed_one(query.text);
    if (q.dim() != corpus.dimension()) {
        throw DomainError("query embedding dimension does not match the corpus");
    }
    const auto& docs = corpus.documents();
    std::vector<double> scores(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        scores[i] = cosine(std::span<const double>(q.values), std::span<const double>(*docs[i].embedding));
    }
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return docs[a].id < docs[b].id;
    });

    RetrievedSet out;
    out.query_id = query.id;
    for (std::size_t r = 0; r < k; ++r) out.documents.push_back(docs[order[r]]);
    return out;
}

std::string build_prompt(const Query& query, std::span<const Document> docs_in_context) {
    std::string prompt;
    if (!docs_in_context.empty()) {
        prompt += "Answer the question using the context below.\n";
        for (std::size_t j = 0; j < docs_in_context.size(); ++j) {
            prompt += "Context [" + std::to_string(j + 1) + "]: " + docs_in_context[j].text + "\n";
        }
    }
    prompt += "Question: " + query.text + "\n";
    prompt += "Answer:";
    return prompt;
}

// ---------------------------------------------------------------------------

namespace {

std::string required_string(const nlohmann::json& row, const char* key) {
    if (!row.contains(key)) throw DomainError(std::string("missing field '") + key + "'");
    const auto& v = row.at(key);
    if (!v.is_string()) throw DomainError(std::string("field '") + key + "' must be a string");
    auto s = v.get<std::string>();
    if (s.empty()) throw DomainError(std::string("field '") + key + "' is empty");
    return s;
}

}  // namespace

DatasetRecord parse_record(const nlohmann::json& row, std::size_t expected_documents) {
    if (!row.is_object()) throw DomainError("row is not a JSON object");
    DatasetRecord rec;
    rec.query.id = required_string(row, "id");
    rec.query.text = required_string(row, "question");
    rec.gold_answer = required_string(row, "answer");
    rec.query.gold_answer = rec.gold_answer;
    if (row.contains("incorrect_answer") && !row["incorrect_answer"].is_null()) {
        rec.query.incorrect_target = required_string(row, "incorrect_answer");
    }

    if (!row.contains("documents") || !row["documents"].is_array()) {
        throw DomainError("missing field 'documents'");
    }
    const auto& docs = row["documents"];
    if (expected_documents != 0 && docs.size() != expected_documents) {
        throw DomainError("expected " + std::to_string(expected_documents) + " documents, found " +
                          std::to_string(docs.size()));
    }
    if (docs.empty()) throw DomainError("record has no documents");
    std::set<std::string> ids;
    for (const auto& d : docs) {
        if (!d.is_object()) throw DomainError("document entry is not an object");
        Document doc;
        doc.id = required_string(d, "id");
        doc.text = required_string(d, "text");
        doc.origin = Origin::Dataset;
        if (!ids.insert(doc.id).second) throw DomainError("duplicate document id '" + doc.id + "'");
        rec.provided_documents.push_back(std::move(doc));
    }
    return rec;
}

nlohmann::json record_to_json(const DatasetRecord& record) {
    auto docs = nlohmann::json::array();
    for (const auto& d : record.provided_documents) docs.push_back({{"id", d.id}, {"text", d.text}});
    nlohmann::json row = {{"id", record.query.id},
                          {"question", record.query.text},
                          {"answer", record.gold_answer},
                          {"documents", docs}};
    if (record.query.incorrect_target) row["incorrect_answer"] = *record.query.incorrect_target;
    return row;
}

IngestResult ingest(const std::filesystem::path& path, const IngestOptions& options) {
    if (options.format != "jsonl") {
        throw ConfigError("unsupported dataset format '" + options.format + "' (only jsonl)");
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot read dataset " + path.string());

    IngestResult result;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto rec = parse_record(nlohmann::json::parse(line), options.expected_documents);
            if (!ids.insert(rec.query.id).second) {
                throw DomainError("duplicate record id '" + rec.query.id + "'");
            }
            result.records.push_back(std::move(rec));
        } catch (const nlohmann::json::parse_error& e) {
            result.diagnostics.push_back({line_no, std::string("invalid JSON: ") + e.what()});
        } catch (const DomainError& e) {
            result.diagnostics.push_back({line_no, e.what()});
        }
    }
    if (result.records.empty()) {
        throw EmptyDatasetError("dataset " + path.string() + " has no valid records");
    }
    return result;
}

}  // namespace influence
