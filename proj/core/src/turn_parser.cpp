#include "factguard/turn_parser.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace factguard {
namespace {

constexpr std::array<Tag, 3> kTags{Tag::Think, Tag::ToolCall, Tag::Answer};

struct TagToken {
    Tag tag;
    bool closing;
    std::size_t pos;
    std::size_t end;
};

// Next tag token at or after `from`.
std::optional<TagToken> next_token(std::string_view raw, std::size_t from) {
    for (std::size_t p = raw.find('<', from); p != std::string_view::npos; p = raw.find('<', p + 1)) {
        const std::string_view rest = raw.substr(p);
        for (Tag tag : kTags) {
            if (rest.starts_with(open_tag(tag))) return TagToken{tag, false, p, p + open_tag(tag).size()};
            if (rest.starts_with(close_tag(tag))) return TagToken{tag, true, p, p + close_tag(tag).size()};
        }
    }
    return std::nullopt;
}

std::optional<std::string>& body_slot(ParsedTurn& turn, Tag tag) {
    switch (tag) {
    case Tag::Think: return turn.think_text;
    case Tag::ToolCall: return turn.tool_call_raw;
    case Tag::Answer: return turn.answer_raw;
    }
    return turn.think_text;
}

const std::optional<std::string>& body_slot(const ParsedTurn& turn, Tag tag) {
    return body_slot(const_cast<ParsedTurn&>(turn), tag);
}

std::optional<TagSpan> span_of(const ParsedTurn& turn, Tag tag) {
    for (const auto& s : turn.span_map)
        if (s.tag == tag) return s;
    return std::nullopt;
}

void mark_outside(std::string_view raw, std::size_t from, std::size_t to, bool& flag) {
    if (!flag && from < to && !detail::is_blank(raw.substr(from, to - from))) flag = true;
}

} // namespace

std::string_view open_tag(Tag tag) {
    switch (tag) {
    case Tag::Think: return "<think>";
    case Tag::ToolCall: return "<tool_call>";
    case Tag::Answer: return "<answer>";
    }
    return "<think>";
}

std::string_view close_tag(Tag tag) {
    switch (tag) {
    case Tag::Think: return "</think>";
    case Tag::ToolCall: return "</tool_call>";
    case Tag::Answer: return "</answer>";
    }
    return "</think>";
}

ParsedTurn parse_turn(std::string_view raw) {
    ParsedTurn turn;
    std::size_t pos = 0;
    while (auto tok = next_token(raw, pos)) {
        mark_outside(raw, pos, tok->pos, turn.outside_text);
        if (tok->closing) {
            turn.stray_tags.push_back({tok->tag, true, tok->pos});
            pos = tok->end;
            continue;
        }
        const std::string_view close = close_tag(tok->tag);
        const std::size_t close_pos = raw.find(close, tok->end);
        if (close_pos == std::string_view::npos) {
            turn.stray_tags.push_back({tok->tag, false, tok->pos});
            pos = tok->end;
            continue;
        }
        // Innermost pairing: a second opening tag of the same kind before the
        // close makes this one stray; scanning resumes right after it.
        const std::string_view open = open_tag(tok->tag);
        const std::size_t reopen = raw.find(open, tok->end);
        if (reopen < close_pos) {
            turn.stray_tags.push_back({tok->tag, false, tok->pos});
            pos = tok->end;
            continue;
        }
        const std::size_t open_pos = tok->pos;

        const std::size_t body_start = open_pos + open.size();
        const std::string_view body = raw.substr(body_start, close_pos - body_start);
        if (next_token(body, 0)) turn.nested_tags = true;

        auto& slot = body_slot(turn, tok->tag);
        if (slot) {
            if (std::find(turn.duplicate_tags.begin(), turn.duplicate_tags.end(), tok->tag) ==
                turn.duplicate_tags.end())
                turn.duplicate_tags.push_back(tok->tag);
        } else {
            slot = std::string(body);
            turn.span_map.push_back({tok->tag, open_pos, close_pos + close.size()});
        }
        pos = close_pos + close.size();
    }
    mark_outside(raw, pos, raw.size(), turn.outside_text);
    return turn;
}

std::string render_turn(const ParsedTurn& turn) {
    std::string out;
    for (const auto& span : turn.span_map) {
        const auto& body = body_slot(turn, span.tag);
        out += open_tag(span.tag);
        if (body) out += *body;
        out += close_tag(span.tag);
    }
    return out;
}

FormatVerdict validate_turn(const ParsedTurn& turn, StageExpectation expectation) {
    std::array<bool, 8> seen{};
    const auto flag = [&](FormatViolation v) { seen[static_cast<std::size_t>(v)] = true; };

    if (!turn.stray_tags.empty()) flag(FormatViolation::UnclosedTag);
    if (!turn.duplicate_tags.empty()) flag(FormatViolation::DuplicateTag);
    if (turn.nested_tags) flag(FormatViolation::TagOrder);
    if (turn.outside_text) flag(FormatViolation::TrailingGarbage);

    const auto think = span_of(turn, Tag::Think);
    const auto tool = span_of(turn, Tag::ToolCall);
    const auto answer = span_of(turn, Tag::Answer);
    if (!think) flag(FormatViolation::MissingThink);

    if (expectation == StageExpectation::Stage1) {
        if (!tool && !answer) flag(FormatViolation::MissingAnswerAndTool);
        if (tool && answer) flag(FormatViolation::DuplicateTag);
    } else {
        if (!answer) flag(FormatViolation::MissingAnswerAndTool);
        // The single tool round is already spent in the refinement turn.
        if (tool) flag(FormatViolation::DuplicateTag);
    }

    if (think) {
        if ((tool && tool->byte_start < think->byte_start) || (answer && answer->byte_start < think->byte_start))
            flag(FormatViolation::TagOrder);
    }
    if (turn.tool_call_raw && !parse_tool_action(*turn.tool_call_raw)) flag(FormatViolation::BadToolJson);
    if (turn.answer_raw && !parse_answer_label(*turn.answer_raw)) flag(FormatViolation::BadAnswerToken);

    FormatVerdict verdict;
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i]) verdict.violations.push_back(static_cast<FormatViolation>(i));
    verdict.well_formed = verdict.violations.empty();
    verdict.answer_parseable = turn.answer_raw && parse_answer_label(*turn.answer_raw);
    return verdict;
}

FormatVerdict validate_format(std::span<const ParsedTurn> turns, StageExpectation last_expectation) {
    FormatVerdict out;
    if (turns.empty()) {
        out.violations = {FormatViolation::MissingThink, FormatViolation::MissingAnswerAndTool};
        return out;
    }
    std::array<bool, 8> seen{};
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const bool last = i + 1 == turns.size();
        const FormatVerdict v = validate_turn(turns[i], last ? last_expectation : StageExpectation::Stage1);
        for (FormatViolation code : v.violations) seen[static_cast<std::size_t>(code)] = true;
        if (last) out.answer_parseable = v.answer_parseable;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i]) out.violations.push_back(static_cast<FormatViolation>(i));
    out.well_formed = out.violations.empty();
    return out;
}

Parsed<Label> parse_answer_label(std::string_view answer_raw) {
    if (auto label = label_from_string(answer_raw)) return Parsed<Label>::ok(*label);
    return Parsed<Label>::fail("BAD_ANSWER_TOKEN");
}

Parsed<ToolAction> parse_tool_action(std::string_view tool_call_raw) {
    using Result = Parsed<ToolAction>;
    const nlohmann::json payload = nlohmann::json::parse(tool_call_raw, nullptr, false);
    if (payload.is_discarded() || !payload.is_object()) return Result::fail("BAD_TOOL_JSON");
    const auto tool_it = payload.find("tool");
    if (tool_it == payload.end() || !tool_it->is_string()) return Result::fail("BAD_TOOL_JSON");

    const auto tool = tool_from_string(tool_it->get<std::string>());
    if (!tool) return Result::fail("UNKNOWN_TOOL");

    if (*tool == ToolId::FactProbe) {
        const auto q = payload.find("query");
        if (q == payload.end() || !q->is_string()) return Result::fail("BAD_PARAMS");
        const std::string query = std::string(detail::trim(q->get<std::string>()));
        if (query.empty()) return Result::fail("BAD_PARAMS");
        return Result::ok(ToolAction{FactProbeParams{query}});
    }

    const auto s = payload.find("start_s");
    const auto e = payload.find("end_s");
    if (s == payload.end() || e == payload.end() || !s->is_number() || !e->is_number())
        return Result::fail("BAD_PARAMS");
    const double start = s->get<double>();
    const double end = e->get<double>();
    if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || !(start < end))
        return Result::fail("BAD_PARAMS");
    return Result::ok(ToolAction{ClipScoutParams{start, end}});
}

} // namespace factguard
