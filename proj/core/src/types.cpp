#include "factguard/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "text_util.hpp"

namespace factguard {

std::string_view to_string(Label label) { return label == Label::Fake ? "fake" : "real"; }

std::string_view to_string(SourceDataset dataset) {
    switch (dataset) {
    case SourceDataset::FakeSV: return "FakeSV";
    case SourceDataset::FakeTT: return "FakeTT";
    case SourceDataset::FakeVV: return "FakeVV";
    case SourceDataset::Synthetic: return "Synthetic";
    }
    return "Synthetic";
}

std::string_view to_string(ToolId tool) { return tool == ToolId::FactProbe ? "FactProbe" : "ClipScout"; }

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::Initial: return "Initial";
    case Stage::AwaitingTool: return "AwaitingTool";
    case Stage::Refining: return "Refining";
    case Stage::Done: return "Done";
    }
    return "Initial";
}

std::string_view to_string(Tag tag) {
    switch (tag) {
    case Tag::Think: return "think";
    case Tag::ToolCall: return "tool_call";
    case Tag::Answer: return "answer";
    }
    return "think";
}

namespace {

constexpr std::array<std::pair<FormatViolation, std::string_view>, 8> kViolationNames{{
    {FormatViolation::MissingThink, "MISSING_THINK"},
    {FormatViolation::MissingAnswerAndTool, "MISSING_ANSWER_AND_TOOL"},
    {FormatViolation::UnclosedTag, "UNCLOSED_TAG"},
    {FormatViolation::DuplicateTag, "DUPLICATE_TAG"},
    {FormatViolation::TagOrder, "TAG_ORDER"},
    {FormatViolation::BadToolJson, "BAD_TOOL_JSON"},
    {FormatViolation::BadAnswerToken, "BAD_ANSWER_TOKEN"},
    {FormatViolation::TrailingGarbage, "TRAILING_GARBAGE"},
}};

} // namespace

std::string_view to_string(FormatViolation v) {
    for (const auto& [code, name] : kViolationNames)
        if (code == v) return name;
    return "UNKNOWN";
}

std::optional<FormatViolation> format_violation_from_string(std::string_view text) {
    for (const auto& [code, name] : kViolationNames)
        if (name == text) return code;
    return std::nullopt;
}

bool FormatVerdict::has(FormatViolation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

std::optional<Label> label_from_string(std::string_view text) {
    const std::string norm = detail::lower(detail::trim(text));
    if (norm == "fake") return Label::Fake;
    if (norm == "real") return Label::Real;
    return std::nullopt;
}

std::optional<SourceDataset> dataset_from_string(std::string_view text) {
    const std::string norm = detail::lower(detail::trim(text));
    if (norm == "fakesv") return SourceDataset::FakeSV;
    if (norm == "fakett") return SourceDataset::FakeTT;
    if (norm == "fakevv") return SourceDataset::FakeVV;
    if (norm == "synthetic") return SourceDataset::Synthetic;
    return std::nullopt;
}

std::optional<ToolId> tool_from_string(std::string_view text) {
    if (text == "FactProbe") return ToolId::FactProbe;
    if (text == "ClipScout") return ToolId::ClipScout;
    return std::nullopt;
}

ToolId ToolAction::tool_id() const noexcept {
    return std::holds_alternative<FactProbeParams>(params) ? ToolId::FactProbe : ToolId::ClipScout;
}

// ---------------------------------------------------------------------------

AgentState::AgentState(std::map<ToolId, int> budgets) : budgets_(std::move(budgets)) {
    for (auto& [tool, n] : budgets_)
        if (n < 0) n = 0;
}

bool AgentState::is_legal_transition(Stage from, Stage to) noexcept {
    switch (from) {
    case Stage::Initial: return to == Stage::AwaitingTool || to == Stage::Done;
    case Stage::AwaitingTool: return to == Stage::Refining;
    case Stage::Refining: return to == Stage::Done;
    case Stage::Done: return false;
    }
    return false;
}

void AgentState::transition(Stage next) {
    if (!is_legal_transition(stage_, next))
        throw Error("ILLEGAL_TRANSITION",
                    std::string(to_string(stage_)) + " -> " + std::string(to_string(next)));
    stage_ = next;
}

std::optional<int> AgentState::remaining(ToolId tool) const {
    const auto it = budgets_.find(tool);
    if (it == budgets_.end()) return std::nullopt;
    return it->second;
}

bool AgentState::try_consume(ToolId tool) {
    const auto it = budgets_.find(tool);
    if (it == budgets_.end()) return true;
    if (it->second <= 0) return false;
    --it->second;
    return true;
}

// ---------------------------------------------------------------------------

namespace {

const nlohmann::json& require(const nlohmann::json& raw, const char* field) {
    const auto it = raw.find(field);
    if (it == raw.end() || it->is_null()) throw ValidationError("MISSING_FIELD", field, "required field is absent");
    return *it;
}

std::string require_string(const nlohmann::json& raw, const char* field) {
    const auto& v = require(raw, field);
    if (!v.is_string()) throw ValidationError("BAD_TYPE", field, "expected a string");
    return v.get<std::string>();
}

} // namespace

NewsItem validate_news_item(const nlohmann::json& raw) {
    if (!raw.is_object()) throw ValidationError("BAD_TYPE", "<record>", "expected a JSON object");

    NewsItem item;
    item.id = require_string(raw, "id");
    if (detail::trim(item.id).empty()) throw ValidationError("MISSING_FIELD", "id", "identifier is empty");
    item.video_path = require_string(raw, "video_path");

    const auto& duration = require(raw, "duration_s");
    if (!duration.is_number()) throw ValidationError("BAD_TYPE", "duration_s", "expected a number");
    item.video_duration_s = duration.get<double>();
    if (!std::isfinite(item.video_duration_s) || item.video_duration_s < 0.0)
        throw ValidationError("BAD_DURATION", "duration_s", "duration must be a finite value >= 0");

    item.audio_transcript = require_string(raw, "transcript");
    item.metadata_text = require_string(raw, "metadata_text");

    const std::string label = require_string(raw, "label");
    const auto parsed_label = label_from_string(label);
    if (!parsed_label) throw ValidationError("BAD_LABEL", "label", "expected fake or real, got '" + label + "'");
    item.label = *parsed_label;

    const std::string ts = require_string(raw, "published_at");
    const auto parsed_ts = parse_rfc3339(ts);
    if (!parsed_ts) throw ValidationError("BAD_TIMESTAMP", "published_at", "not an RFC-3339 timestamp: '" + ts + "'");
    item.published_at = *parsed_ts;

    const std::string dataset = require_string(raw, "dataset");
    const auto parsed_dataset = dataset_from_string(dataset);
    if (!parsed_dataset) throw ValidationError("BAD_DATASET", "dataset", "unknown dataset '" + dataset + "'");
    item.source_dataset = *parsed_dataset;
    return item;
}

std::vector<std::string> assert_trajectory_wellformed(const Trajectory& t) {
    std::vector<std::string> out;
    if (t.turns.empty() || t.turns.size() > 2) out.emplace_back("TURN_COUNT");
    if (t.action && !t.observation) out.emplace_back("OBS_MISSING");
    if (!t.action && t.observation) out.emplace_back("OBS_UNEXPECTED");
    if (t.action && t.observation) {
        const Observation& obs = *t.observation;
        if (obs.tool_id != t.action->tool_id()) out.emplace_back("OBS_TOOL_MISMATCH");
        bool payload_ok = true;
        if (obs.ok) {
            const bool want_text = obs.tool_id == ToolId::FactProbe;
            payload_ok = want_text ? (obs.text_report && !obs.frame_grid) : (obs.frame_grid && !obs.text_report);
        } else {
            payload_ok = obs.error_note.has_value();
        }
        if (!payload_ok) out.emplace_back("OBS_PAYLOAD");
    }
    if (!t.turns.empty() && t.turns.size() <= 2 && (t.turns.size() == 2) != t.action.has_value())
        out.emplace_back("ACTION_TURN_MISMATCH");
    if (t.verdict.has_value() != t.format_verdict.answer_parseable) out.emplace_back("VERDICT_MISMATCH");
    return out;
}

} // namespace factguard
