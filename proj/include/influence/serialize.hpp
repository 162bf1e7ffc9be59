#pragma once

// JSON forms of every result type. parse(serialize(x)) == x for all of them.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "influence/ablation.hpp"
#include "influence/attack.hpp"
#include "influence/core.hpp"

namespace influence {

void to_json(nlohmann::json& j, const ContextSpec& c);
void from_json(const nlohmann::json& j, ContextSpec& c);
void to_json(nlohmann::json& j, const EntropyEstimate& e);
void from_json(const nlohmann::json& j, EntropyEstimate& e);
void to_json(nlohmann::json& j, const PidBreakdown& p);
void from_json(const nlohmann::json& j, PidBreakdown& p);
void to_json(nlohmann::json& j, const DocumentInfluence& d);
void from_json(const nlohmann::json& j, DocumentInfluence& d);
void to_json(nlohmann::json& j, const InfluenceReport& r);
void from_json(const nlohmann::json& j, InfluenceReport& r);
void to_json(nlohmann::json& j, const EpisodeResult& e);
void from_json(const nlohmann::json& j, EpisodeResult& e);
void to_json(nlohmann::json& j, const DetectionStats& s);
void from_json(const nlohmann::json& j, DetectionStats& s);
void to_json(nlohmann::json& j, const AblationEpisode& e);
void from_json(const nlohmann::json& j, AblationEpisode& e);
void to_json(nlohmann::json& j, const AblationSummary& s);
void from_json(const nlohmann::json& j, AblationSummary& s);

/// {"stats": ..., "attempts", "partial", "table": {"columns": [...], "rows": [[label, rate], ...]}}
/// with rows Top 1, Top 2, Top 3 and Prompt Eng.
nlohmann::json poison_summary_json(const PoisonEvalResult& result);
/// {"summary": ..., "table": {"columns": [...], "rows": [["Rate Response B is Chosen", rate], ...]}}
nlohmann::json ablation_summary_json(const AblationEvalResult& result);

/// Human-readable tables.
std::string format_report_table(const InfluenceReport& report);
std::string format_detection_table(const DetectionStats& stats);

/// One compact JSON document per line.
template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
    std::string out;
    for (const auto& item : items) {
        out += nlohmann::json(item).dump();
        out += '\n';
    }
    return out;
}

template <typename T>
std::vector<T> from_jsonl(const std::string& text) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            out.push_back(nlohmann::json::parse(line).get<T>());
        }
        start = end + 1;
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace influence
