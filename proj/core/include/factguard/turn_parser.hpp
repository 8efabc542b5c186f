#pragma once

#include <span>
#include <string>
#include <string_view>

#include "factguard/error.hpp"
#include "factguard/types.hpp"

namespace factguard {

// Recognized tag tokens are exactly the ASCII strings <think>, </think>,
// <tool_call>, </tool_call>, <answer>, </answer>.
std::string_view open_tag(Tag tag);
std::string_view close_tag(Tag tag);

/// Splits one model turn into its think / tool_call / answer bodies.
///
/// Total over arbitrary bytes. For each element the body is taken between
/// the closing tag and the nearest preceding opening tag of the same kind
/// (innermost); unmatched tokens land in `stray_tags`, repeated elements in
/// `duplicate_tags`.
ParsedTurn parse_turn(std::string_view raw);

// Canonical re-rendering of the parsed elements in span order.
std::string render_turn(const ParsedTurn& turn);

enum class StageExpectation {
    Stage1, // think + exactly one of tool_call / answer
    Stage2, // think + answer
};

// Validates a single turn against one expectation.
FormatVerdict validate_turn(const ParsedTurn& turn, StageExpectation expectation);

// Validates a turn sequence: every turn but the last is held to the Stage1
// contract, the last one to `last_expectation`. answer_parseable reflects
// the last turn only. Violations are de-duplicated in canonical order.
FormatVerdict validate_format(std::span<const ParsedTurn> turns, StageExpectation last_expectation);

// Exact-match label vocabulary after trimming, case-insensitive.
// Error code: BAD_ANSWER_TOKEN.
Parsed<Label> parse_answer_label(std::string_view answer_raw);

// Strict JSON payload {"tool": "FactProbe", "query": ...} or
// {"tool": "ClipScout", "start_s": n, "end_s": n}.
// Error codes: BAD_TOOL_JSON, UNKNOWN_TOOL, BAD_PARAMS.
Parsed<ToolAction> parse_tool_action(std::string_view tool_call_raw);

} // namespace factguard
