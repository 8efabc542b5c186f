#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/eval.hpp"
#include "factguard/tools.hpp"
#include "text_util.hpp"

namespace factguard {
using nlohmann::json;

namespace {

std::optional<int> score_field(const json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_number_integer()) return std::nullopt;
    const auto v = j.at(name).get<std::int64_t>();
    if (v < 1 || v > 5) return std::nullopt;
    return static_cast<int>(v);
}

std::string_view strip_fence(std::string_view text) {
    text = detail::trim(text);
    if (text.substr(0, 3) != "```") return text;
    const std::size_t first_nl = text.find('\n');
    if (first_nl == std::string_view::npos || text.size() < 6 || text.substr(text.size() - 3) != "```") return text;
    const std::string_view info = detail::trim(text.substr(3, first_nl - 3));
    if (!info.empty() && info != "json") return text;
    return detail::trim(text.substr(first_nl + 1, text.size() - 3 - first_nl - 1));
}

} // namespace

std::optional<AuditScore> parse_audit_response(std::string_view text) {
    json j;
    try {
        j = json::parse(strip_fence(text));
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    if (!j.is_object()) return std::nullopt;
    const auto f = score_field(j, "faithfulness");
    const auto l = score_field(j, "logical_consistency");
    const auto e = score_field(j, "evidence_grounding");
    if (!f || !l || !e) return std::nullopt;
    AuditScore out;
    out.faithfulness = *f;
    out.logical_consistency = *l;
    out.evidence_grounding = *e;
    if (j.contains("rationale")) {
        if (!j.at("rationale").is_string()) return std::nullopt;
        out.rationale = j.at("rationale").get<std::string>();
    }
    return out;
}

ModelBackendRequest build_audit_prompt(const Trajectory& t, const PromptTemplateSet& templates) {
    std::string reasoning;
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const auto& think = t.turns[i].parsed.think_text;
        if (!reasoning.empty()) reasoning += "\n";
        reasoning += fmt::format("Turn {}: {}", i + 1, think ? detail::trim(*think) : std::string_view("(none)"));
    }
    std::string evidence = "(no tool was used)";
    std::optional<std::filesystem::path> image;
    if (t.observation) {
        const PromptBlock block = observation_to_prompt_block(*t.observation);
        evidence = block.text;
        image = block.image;
    }
    const std::string prediction = t.verdict ? std::string(to_string(*t.verdict)) : std::string("(none)");

    ChatMessage user{Role::User,
                     render_template(templates.audit,
                                     {{"prediction", prediction}, {"reasoning", reasoning}, {"evidence", evidence}}),
                     {}};
    if (image) user.attachments.push_back({Attachment::Kind::Image, *image});
    ModelBackendRequest req;
    req.messages.push_back(std::move(user));
    req.temperature = 0.0;
    return req;
}

AuditScore audit_reasoning(const Trajectory& t, Label truth, ModelBackend& judge, const PromptTemplateSet& templates) {
    if (!t.verdict || *t.verdict != truth)
        throw Error("PRECONDITION", fmt::format("audit of '{}' requires a correct prediction", t.item_id));
    const ModelBackendRequest req = build_audit_prompt(t, templates);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const ModelBackendResponse resp = judge.complete(req);
        if (auto score = parse_audit_response(resp.text)) {
            score->item_id = t.item_id;
            return *score;
        }
    }
    throw Error("JUDGE_UNPARSEABLE", fmt::format("judge output for '{}' was not a score object twice", t.item_id));
}

} // namespace factguard
