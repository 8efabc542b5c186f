#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factguard/reward.hpp"
#include "factguard/types.hpp"

namespace factguard {

// JSON forms used by every JSONL file the tools read and write. Parsed turns
// are not stored; they are recomputed from raw_text when loading. Loaders
// throw Error{"SCHEMA"} naming the offending field.

nlohmann::json to_json(const NewsItem& item);
nlohmann::json to_json(const ToolAction& action);
nlohmann::json to_json(const Observation& obs);
nlohmann::json to_json(const FormatVerdict& fv);
nlohmann::json to_json(const TrajectoryLogProbs& lp);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const TrajectoryGroup& g);
nlohmann::json to_json(const RewardBreakdown& b);
nlohmann::json to_json(const GrpoResult& r);
nlohmann::json to_json(const ScoredGroup& s);

ToolAction tool_action_from_json(const nlohmann::json& j);
Observation observation_from_json(const nlohmann::json& j);
FormatVerdict format_verdict_from_json(const nlohmann::json& j);
TrajectoryLogProbs logprobs_from_json(const nlohmann::json& j);
Trajectory trajectory_from_json(const nlohmann::json& j);
TrajectoryGroup group_from_json(const nlohmann::json& j);

// One JSON document per line. Blank lines are skipped. Errors: IO, and
// SCHEMA with the 1-based line number for malformed JSON.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it into place.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace factguard
