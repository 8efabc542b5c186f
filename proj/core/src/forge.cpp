#include "factguard/forge.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "factguard/error.hpp"
#include "factguard/serialization.hpp"
#include "factguard/turn_parser.hpp"

namespace factguard {
using nlohmann::json;

std::string_view to_string(RejectionCode code) {
    switch (code) {
    case RejectionCode::MalformedStructure: return "MALFORMED_STRUCTURE";
    case RejectionCode::InvalidToolAction: return "INVALID_TOOL_ACTION";
    case RejectionCode::WrongFinalDecision: return "WRONG_FINAL_DECISION";
    case RejectionCode::HallucinationFlagged: return "HALLUCINATION_FLAGGED";
    }
    return "MALFORMED_STRUCTURE";
}

std::optional<RejectionCode> rejection_code_from_string(std::string_view text) {
    for (auto c : {RejectionCode::MalformedStructure, RejectionCode::InvalidToolAction,
                   RejectionCode::WrongFinalDecision, RejectionCode::HallucinationFlagged})
        if (to_string(c) == text) return c;
    return std::nullopt;
}

json to_json(const ForgeRecord& r) {
    json codes = json::array();
    for (auto c : r.rejection_codes) codes.push_back(to_string(c));
    return {{"item", to_json(r.item)},
            {"trajectory", to_json(r.trajectory)},
            {"teacher_model", r.teacher_model},
            {"kept", r.kept},
            {"rejection_codes", codes}};
}

ForgeRecord forge_record_from_json(const json& j) {
    if (!j.is_object() || !j.contains("item") || !j.contains("trajectory"))
        throw Error("SCHEMA", "forge record needs 'item' and 'trajectory'");
    ForgeRecord r;
    try {
        r.item = validate_news_item(j.at("item"));
    } catch (const ValidationError& e) {
        throw Error("SCHEMA", std::string("item.") + e.what());
    }
    r.trajectory = trajectory_from_json(j.at("trajectory"));
    r.teacher_model = j.value("teacher_model", std::string());
    r.kept = j.value("kept", false);
    if (j.contains("rejection_codes")) {
        for (const auto& c : j.at("rejection_codes")) {
            auto code = c.is_string() ? rejection_code_from_string(c.get<std::string>()) : std::nullopt;
            if (!code) throw Error("SCHEMA", "unknown rejection code " + c.dump());
            r.rejection_codes.push_back(*code);
        }
    }
    return r;
}

std::vector<ForgeRecord> generate_teacher_trajectories(const std::vector<NewsItem>& items, ModelBackend& teacher,
                                                       const ToolRegistry& tools, const PromptTemplateSet& templates,
                                                       const ForgeConfig& config) {
    return run_batch(
        items.size(),
        [&](std::size_t i) {
            ForgeRecord r;
            r.item = items[i];
            r.trajectory = run_episode(items[i], teacher, tools, templates, config.episode);
            r.teacher_model = teacher.name();
            return r;
        },
        config.concurrency);
}

std::map<std::string, bool> load_review(const std::filesystem::path& path) {
    std::map<std::string, bool> out;
    std::size_t row = 0;
    for (const auto& j : read_jsonl(path)) {
        ++row;
        if (!j.is_object() || !j.contains("item_id") || !j.at("item_id").is_string() || !j.contains("flag") ||
            !j.at("flag").is_boolean())
            throw Error("SCHEMA", fmt::format("{}: row {} must be {{\"item_id\": str, \"flag\": bool}}", path.string(), row));
        bool& flag = out[j.at("item_id").get<std::string>()];
        flag = flag || j.at("flag").get<bool>();
    }
    return out;
}

std::vector<RejectionCode> rejection_codes_for(const ForgeRecord& r, const std::map<std::string, bool>& review) {
    const Trajectory& t = r.trajectory;
    std::vector<RejectionCode> codes;

    if (!t.format_verdict.well_formed || !assert_trajectory_wellformed(t).empty())
        codes.push_back(RejectionCode::MalformedStructure);

    bool invalid_tool = t.followup.has_value();
    for (const auto& turn : t.turns)
        if (turn.parsed.tool_call_raw && !parse_tool_action(*turn.parsed.tool_call_raw)) invalid_tool = true;
    if (t.observation && t.observation->error_note == "BUDGET_EXHAUSTED") invalid_tool = true;
    if (invalid_tool) codes.push_back(RejectionCode::InvalidToolAction);

    if (t.verdict != r.item.label) codes.push_back(RejectionCode::WrongFinalDecision);

    const auto flagged = review.find(r.item.id);
    if (flagged != review.end() && flagged->second) codes.push_back(RejectionCode::HallucinationFlagged);
    return codes;
}

FilterResult filter_rules(std::vector<ForgeRecord> records, const std::map<std::string, bool>& review) {
    FilterResult out;
    for (auto& r : records) {
        r.rejection_codes = rejection_codes_for(r, review);
        r.kept = r.rejection_codes.empty();
        (r.kept ? out.kept : out.rejected).push_back(std::move(r));
    }
    return out;
}

json to_json(const SftStats& s) {
    return {{"total", s.total}, {"tool_usage", s.tool_usage}, {"per_dataset", s.per_dataset}};
}

namespace {

json message_json(const ChatMessage& m) {
    json attachments = json::array();
    for (const auto& a : m.attachments)
        attachments.push_back({{"kind", a.kind == Attachment::Kind::Image ? "image" : "video"},
                               {"path", a.path.generic_string()}});
    json j{{"role", to_string(m.role)}, {"content", m.text}};
    if (!attachments.empty()) j["attachments"] = std::move(attachments);
    return j;
}

} // namespace

json sft_example(const ForgeRecord& r, const PromptTemplateSet& student, const PromptLimits& limits) {
    const Trajectory& t = r.trajectory;
    if (t.turns.empty()) throw Error("UNKEPT_RECORD", "record '" + r.item.id + "' has no turns");
    if (student.reveals_label) throw Error("LABEL_LEAK", "student templates must not reveal the label");

    std::vector<ChatMessage> messages;
    if (t.turns.size() == 2 && t.observation) {
        messages = build_stage2_prompt(r.item, t.turns[0].raw_text, *t.observation, student, limits).messages;
        messages.push_back({Role::Assistant, t.turns[1].raw_text, {}});
    } else {
        messages = build_stage1_prompt(r.item, student, limits).messages;
        messages.push_back({Role::Assistant, t.turns[0].raw_text, {}});
    }

    json out_messages = json::array();
    std::string target;
    for (const auto& m : messages) {
        if (m.role != Role::Assistant && m.text.find(kLabelHintMarker) != std::string::npos)
            throw Error("LABEL_LEAK", "prompt for '" + r.item.id + "' carries the label hint");
        if (m.role == Role::Assistant) {
            if (!target.empty()) target += '\n';
            target += m.text;
        }
        out_messages.push_back(message_json(m));
    }
    json tool = t.action ? json(to_string(t.action->tool_id())) : json(nullptr);
    return {{"id", r.item.id},
            {"dataset", to_string(r.item.source_dataset)},
            {"tool", tool},
            {"messages", std::move(out_messages)},
            {"target_text", std::move(target)}};
}

SftStats emit_sft_dataset(const std::vector<ForgeRecord>& kept, const std::filesystem::path& out_path,
                          const PromptTemplateSet& student, const PromptLimits& limits) {
    SftStats stats;
    std::vector<json> rows;
    rows.reserve(kept.size());
    for (const auto& r : kept) {
        if (!r.kept || !r.rejection_codes.empty())
            throw Error("UNKEPT_RECORD", "record '" + r.item.id + "' did not pass filtering");
        rows.push_back(sft_example(r, student, limits));
        ++stats.total;
        ++stats.tool_usage[r.trajectory.action ? std::string(to_string(r.trajectory.action->tool_id())) : "none"];
        ++stats.per_dataset[std::string(to_string(r.item.source_dataset))];
    }
    write_jsonl(out_path, rows);
    return stats;
}

} // namespace factguard
