#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factguard/orchestrator.hpp"
#include "factguard/types.hpp"

namespace factguard {

enum class RejectionCode { MalformedStructure, InvalidToolAction, WrongFinalDecision, HallucinationFlagged };
std::string_view to_string(RejectionCode code);
std::optional<RejectionCode> rejection_code_from_string(std::string_view text);

/// One teacher-authored trajectory with its item. `kept` is true exactly
/// when `rejection_codes` is empty once filtering has run.
struct ForgeRecord {
    NewsItem item;
    Trajectory trajectory;
    std::string teacher_model;
    bool kept = false;
    std::vector<RejectionCode> rejection_codes;
};

nlohmann::json to_json(const ForgeRecord& record);
ForgeRecord forge_record_from_json(const nlohmann::json& j);

struct ForgeConfig {
    EpisodeConfig episode; // temperature 0 by default
    int concurrency = kDefaultConcurrency;
};

// One episode per item with label-revealing templates; records come back
// unfiltered and in input order. Error: BACKEND_UNREACHABLE.
std::vector<ForgeRecord> generate_teacher_trajectories(const std::vector<NewsItem>& items, ModelBackend& teacher,
                                                       const ToolRegistry& tools, const PromptTemplateSet& templates,
                                                       const ForgeConfig& config = {});

// Manual review results: JSONL rows {"item_id": str, "flag": bool}. A true
// flag marks a hallucinated trajectory.
std::map<std::string, bool> load_review(const std::filesystem::path& path);

// The rule checks for one record, in canonical order.
std::vector<RejectionCode> rejection_codes_for(const ForgeRecord& record, const std::map<std::string, bool>& review);

struct FilterResult {
    std::vector<ForgeRecord> kept;
    std::vector<ForgeRecord> rejected;
};

FilterResult filter_rules(std::vector<ForgeRecord> records, const std::map<std::string, bool>& review = {});

struct SftStats {
    int total = 0;
    std::map<std::string, int> tool_usage; // "FactProbe", "ClipScout", "none"
    std::map<std::string, int> per_dataset;
};

nlohmann::json to_json(const SftStats& stats);

// Builds the student-facing conversation for a kept record: system and
// user stage prompts rendered without the label, assistant turns verbatim,
// and the observation block as a tool message. "target_text" is the
// assistant turns joined by '\n', the text the fine-tuning loss covers.
// Error: LABEL_LEAK when a prompt still carries the label hint.
nlohmann::json sft_example(const ForgeRecord& record, const PromptTemplateSet& student_templates,
                           const PromptLimits& limits = {});

// Errors: UNKEPT_RECORD, LABEL_LEAK, IO.
SftStats emit_sft_dataset(const std::vector<ForgeRecord>& kept, const std::filesystem::path& out_path,
                          const PromptTemplateSet& student_templates = default_templates(),
                          const PromptLimits& limits = {});

} // namespace factguard
