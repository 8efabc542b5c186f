#include "factguard/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "factguard/error.hpp"

namespace factguard {
namespace fs = std::filesystem;

namespace {

constexpr const char* kStage1System =
    R"(You are FactGuard, an agent that verifies short news videos. You receive the video, the speech transcript of its audio track, and its text metadata (title and keywords). Decide whether the news is fake or real.

You work in at most two turns.
Turn 1: reason inside <think></think>. Describe what the video, transcript and metadata claim, check whether they agree, and state how uncertain you are. If your reasoning is sufficient, give the verdict in <answer></answer>. If decisive evidence is missing, request exactly one tool inside <tool_call></tool_call> instead of answering.
Turn 2 (only after a tool call): you receive the tool result. Reason again inside <think></think> and give the verdict in <answer></answer>.

Tools. The <tool_call> body is a single JSON object:
- FactProbe searches the web for external facts about a claim.
  {"tool": "FactProbe", "query": "<concise factual query>"}
- ClipScout shows four frames sampled uniformly from a time span of the video as a 2x2 grid. It can be used at most once.
  {"tool": "ClipScout", "start_s": <seconds>, "end_s": <seconds>}

The answer is exactly one word: fake or real.)";

constexpr const char* kStage1User = R"(Video duration: {{duration_s}} seconds.
Title and keywords: {{metadata_text}}
Speech transcript: {{transcript}}

Assess the claim and your uncertainty. Either answer now or request one tool.)";

constexpr const char* kTeacherStage1User = R"(Video duration: {{duration_s}} seconds.
Title and keywords: {{metadata_text}}
Speech transcript: {{transcript}}

GROUND-TRUTH LABEL: {{label}}
You are writing a demonstration trajectory. Never mention that the label was given. Reason from the content, make your uncertainty explicit, decide whether a tool would resolve it, and only then conclude.)";

constexpr const char* kStage2User = R"(Tool result:
{{observation}}

Using the original video, transcript and metadata together with this evidence, reason again inside <think></think> and give the final verdict (fake or real) inside <answer></answer>. Do not call another tool.)";

constexpr const char* kAudit = R"(You are auditing the reasoning of a video misinformation detector. Its prediction is already known to be correct; judge only the reasoning.

Prediction: {{prediction}}

Reasoning trace:
{{reasoning}}

Evidence available to the detector:
{{evidence}}

Score each dimension from 1 (poor) to 5 (excellent):
- faithfulness: statements are supported by the provided multimodal evidence rather than by speculation or internally generated assumptions.
- logical_consistency: the reasoning chain is coherent and actually leads to the prediction.
- evidence_grounding: the reasoning identifies the salient misinformation pattern and cites explicit evidence for it.

Reply with only a JSON object:
{"faithfulness": <1-5>, "logical_consistency": <1-5>, "evidence_grounding": <1-5>, "rationale": "<one sentence>"})";

struct Slot {
    const char* file;
    std::string PromptTemplateSet::*member;
};

constexpr Slot kSlots[] = {
    {"stage1_system.txt", &PromptTemplateSet::stage1_system},
    {"stage1_user.txt", &PromptTemplateSet::stage1_user},
    {"stage2_user.txt", &PromptTemplateSet::stage2_user},
    {"audit.txt", &PromptTemplateSet::audit},
};

void check(std::string_view which, std::string_view text, std::vector<std::string> declared) {
    const auto found = placeholders_in(text);
    for (const auto& name : declared) {
        const auto n = std::count(found.begin(), found.end(), name);
        if (n != 1)
            throw Error("TEMPLATE_PLACEHOLDER_MISSING", std::string(which) + " must contain {{" + name +
                                                            "}} exactly once, found " + std::to_string(n));
    }
    for (const auto& name : found) {
        if (std::find(declared.begin(), declared.end(), name) == declared.end())
            throw Error("TEMPLATE_PLACEHOLDER_UNKNOWN", std::string(which) + " uses undeclared {{" + name + "}}");
    }
}

} // namespace

PromptTemplateSet default_templates() { return {kStage1System, kStage1User, kStage2User, kAudit, false}; }

PromptTemplateSet teacher_templates() { return {kStage1System, kTeacherStage1User, kStage2User, kAudit, true}; }

std::vector<std::string> placeholders_in(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t p = text.find("{{"); p != std::string_view::npos; p = text.find("{{", p + 2)) {
        const std::size_t close = text.find("}}", p + 2);
        if (close == std::string_view::npos) break;
        out.emplace_back(text.substr(p + 2, close - p - 2));
        p = close;
    }
    return out;
}

void validate_templates(const PromptTemplateSet& t) {
    check("stage1_system", t.stage1_system, {});
    std::vector<std::string> stage1{"duration_s", "metadata_text", "transcript"};
    if (t.reveals_label) stage1.emplace_back("label");
    check("stage1_user", t.stage1_user, stage1);
    check("stage2_user", t.stage2_user, {"observation"});
    check("audit", t.audit, {"prediction", "reasoning", "evidence"});
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find("{{", pos);
        const std::size_t close = open == std::string_view::npos ? open : text.find("}}", open + 2);
        if (open == std::string_view::npos || close == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        const std::string name(text.substr(open + 2, close - open - 2));
        const auto it = values.find(name);
        if (it == values.end()) throw Error("TEMPLATE_PLACEHOLDER_UNKNOWN", "no value bound for {{" + name + "}}");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

PromptTemplateSet load_templates(const fs::path& dir, bool reveals_label) {
    PromptTemplateSet t = reveals_label ? teacher_templates() : default_templates();
    for (const auto& slot : kSlots) {
        std::ifstream in(dir / slot.file);
        if (!in) continue;
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        while (!text.empty() && text.back() == '\n') text.pop_back();
        t.*slot.member = std::move(text);
    }
    validate_templates(t);
    return t;
}

void save_templates(const PromptTemplateSet& templates, const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& slot : kSlots) {
        std::ofstream out(dir / slot.file);
        out << templates.*slot.member << '\n';
        if (!out) throw Error("IO", "cannot write " + (dir / slot.file).string());
    }
}

} // namespace factguard
