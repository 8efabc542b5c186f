#include <random>
#include <set>

#include <gtest/gtest.h>

#include "factguard/turn_parser.hpp"

using namespace factguard;
using V = FormatViolation;

namespace {

const std::string kProbe = R"({"tool":"FactProbe","query":"q"})";

FormatVerdict check(std::string_view raw, StageExpectation stage) {
    const ParsedTurn t = parse_turn(raw);
    return validate_turn(t, stage);
}

std::set<V> as_set(const FormatVerdict& v) { return {v.violations.begin(), v.violations.end()}; }

} // namespace

TEST(ParseTurn, ThinkAndAnswer) {
    const auto t = parse_turn("<think>t</think><answer>fake</answer>");
    EXPECT_EQ(t.think_text, "t");
    EXPECT_EQ(t.answer_raw, "fake");
    EXPECT_FALSE(t.tool_call_raw);
    ASSERT_EQ(t.span_map.size(), 2u);
    EXPECT_EQ(t.span_map[0].tag, Tag::Think);
    EXPECT_EQ(t.span_map[0].byte_start, 0u);
    EXPECT_EQ(t.span_map[0].byte_end, 16u);
    EXPECT_EQ(t.span_map[1].byte_start, 16u);
}

TEST(ParseTurn, ThinkAndToolCall) {
    const auto t = parse_turn("<think>t</think><tool_call>" + kProbe + "</tool_call>");
    EXPECT_EQ(t.think_text, "t");
    EXPECT_EQ(t.tool_call_raw, kProbe);
    EXPECT_FALSE(t.answer_raw);
}

TEST(ParseTurn, NoTags) {
    const auto t = parse_turn("no tags at all");
    EXPECT_FALSE(t.think_text);
    EXPECT_FALSE(t.tool_call_raw);
    EXPECT_FALSE(t.answer_raw);
    EXPECT_TRUE(t.span_map.empty());
    EXPECT_TRUE(t.outside_text);
}

TEST(ParseTurn, InnermostOpenWins) {
    const auto t = parse_turn("<think>a<think>b</think><answer>real</answer>");
    EXPECT_EQ(t.think_text, "b");
    EXPECT_EQ(t.answer_raw, "real");
    ASSERT_EQ(t.stray_tags.size(), 1u);
    EXPECT_FALSE(t.stray_tags[0].closing);
    EXPECT_EQ(t.stray_tags[0].byte_offset, 0u);
}

TEST(ParseTurn, UnclosedAndStrayClose) {
    const auto t = parse_turn("<think>never closed</answer>");
    EXPECT_FALSE(t.think_text);
    EXPECT_EQ(t.stray_tags.size(), 2u);
}

TEST(ParseTurn, DuplicateKeepsFirst) {
    const auto t = parse_turn("<think>1</think><think>2</think><answer>fake</answer>");
    EXPECT_EQ(t.think_text, "1");
    EXPECT_EQ(t.duplicate_tags, std::vector<Tag>{Tag::Think});
}

TEST(ParseTurn, NestedTagFlagged) {
    const auto t = parse_turn("<think>a <answer>fake</answer></think>");
    EXPECT_TRUE(t.nested_tags);
    EXPECT_FALSE(t.answer_raw);
}

TEST(ParseTurn, TagsAreCaseSensitive) {
    const auto t = parse_turn("<THINK>x</THINK>");
    EXPECT_FALSE(t.think_text);
    EXPECT_TRUE(t.outside_text);
}

// Every combination of {think, tool_call, answer} presence, think placed
// before or after the action elements, under both stage expectations.
TEST(ValidateFormat, RuleTableOracle) {
    int cases = 0;
    for (int mask = 0; mask < 32; ++mask) {
        const bool think = mask & 1;
        const bool tool = mask & 2;
        const bool answer = mask & 4;
        const bool think_last = mask & 8;
        const bool stage2 = mask & 16;

        std::string actions;
        if (tool) actions += "<tool_call>" + kProbe + "</tool_call>";
        if (answer) actions += "<answer>fake</answer>";
        const std::string reasoning = think ? "<think>r</think>" : "";
        const std::string raw = think_last ? actions + reasoning : reasoning + actions;

        std::set<V> expected;
        if (!think) expected.insert(V::MissingThink);
        if (stage2) {
            if (!answer) expected.insert(V::MissingAnswerAndTool);
            if (tool) expected.insert(V::DuplicateTag);
        } else {
            if (!tool && !answer) expected.insert(V::MissingAnswerAndTool);
            if (tool && answer) expected.insert(V::DuplicateTag);
        }
        if (think && think_last && (tool || answer)) expected.insert(V::TagOrder);

        const auto verdict = check(raw, stage2 ? StageExpectation::Stage2 : StageExpectation::Stage1);
        EXPECT_EQ(as_set(verdict), expected) << "mask=" << mask << " raw=" << raw;
        EXPECT_EQ(verdict.well_formed, expected.empty()) << raw;
        EXPECT_TRUE(std::is_sorted(verdict.violations.begin(), verdict.violations.end()));
        ++cases;
    }
    EXPECT_EQ(cases, 32);
}

TEST(ValidateFormat, StageOneBothActionsRejected) {
    const auto v = check("<think>t</think><tool_call>" + kProbe + "</tool_call><answer>fake</answer>",
                         StageExpectation::Stage1);
    EXPECT_FALSE(v.well_formed);
    EXPECT_TRUE(v.has(V::DuplicateTag));
}

TEST(ValidateFormat, StageTwoMissingAnswer) {
    const auto v = check("<think>t</think>", StageExpectation::Stage2);
    EXPECT_EQ(v.violations, std::vector<V>{V::MissingAnswerAndTool});
}

TEST(ValidateFormat, TrailingGarbageOnly) {
    const auto v = check("<think>t</think><answer>fake</answer> thanks!", StageExpectation::Stage1);
    EXPECT_EQ(v.violations, std::vector<V>{V::TrailingGarbage});
    EXPECT_TRUE(v.answer_parseable);
}

TEST(ValidateFormat, WhitespaceBetweenElementsIsFine) {
    EXPECT_TRUE(check("\n<think>t</think>\n  <answer> Real </answer>\n", StageExpectation::Stage1).well_formed);
}

TEST(ValidateFormat, BadPayloads) {
    EXPECT_EQ(check("<think>t</think><tool_call>{nope}</tool_call>", StageExpectation::Stage1).violations,
              std::vector<V>{V::BadToolJson});
    EXPECT_EQ(check(R"(<think>t</think><tool_call>{"tool":"WebCam"}</tool_call>)", StageExpectation::Stage1).violations,
              std::vector<V>{V::BadToolJson});
    const auto v = check("<think>t</think><answer>probably fake</answer>", StageExpectation::Stage1);
    EXPECT_EQ(v.violations, std::vector<V>{V::BadAnswerToken});
    EXPECT_FALSE(v.answer_parseable);
}

TEST(ValidateFormat, UnclosedTag) {
    const auto v = check("<think>t</think><answer>fake", StageExpectation::Stage1);
    EXPECT_TRUE(v.has(V::UnclosedTag));
    EXPECT_FALSE(v.answer_parseable);
}

TEST(ValidateFormat, SequenceChecksEarlierTurnsAsStageOne) {
    const std::vector<ParsedTurn> turns{parse_turn("<think>a</think><tool_call>" + kProbe + "</tool_call>"),
                                        parse_turn("<think>b</think><answer>real</answer>")};
    const auto v = validate_format(turns, StageExpectation::Stage2);
    EXPECT_TRUE(v.well_formed);
    EXPECT_TRUE(v.answer_parseable);

    const std::vector<ParsedTurn> bad{parse_turn("<think>a</think>"), turns[1]};
    const auto w = validate_format(bad, StageExpectation::Stage2);
    EXPECT_EQ(w.violations, std::vector<V>{V::MissingAnswerAndTool});
    EXPECT_TRUE(w.answer_parseable);
}

TEST(ParseAnswerLabel, ExactMatchPolicy) {
    EXPECT_EQ(*parse_answer_label(" Fake "), Label::Fake);
    EXPECT_EQ(*parse_answer_label("REAL"), Label::Real);
    const auto bad = parse_answer_label("probably fake");
    EXPECT_FALSE(bad);
    EXPECT_EQ(bad.error, "BAD_ANSWER_TOKEN");
    EXPECT_FALSE(parse_answer_label("fake."));
    EXPECT_FALSE(parse_answer_label(""));
}

TEST(ParseToolAction, ClipScout) {
    const auto a = parse_tool_action(R"({"tool":"ClipScout","start_s":10,"end_s":20})");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->tool_id(), ToolId::ClipScout);
    EXPECT_EQ(std::get<ClipScoutParams>(a->params), (ClipScoutParams{10, 20}));
}

TEST(ParseToolAction, Errors) {
    EXPECT_EQ(parse_tool_action(R"({"tool":"ClipScout","start_s":20,"end_s":10})").error, "BAD_PARAMS");
    EXPECT_EQ(parse_tool_action(R"({"tool":"ClipScout","start_s":-1,"end_s":10})").error, "BAD_PARAMS");
    EXPECT_EQ(parse_tool_action(R"({"tool":"ClipScout","start_s":"1","end_s":10})").error, "BAD_PARAMS");
    EXPECT_EQ(parse_tool_action(R"({"tool":"WebCam"})").error, "UNKNOWN_TOOL");
    EXPECT_EQ(parse_tool_action(R"({"tool":"FactProbe","query":"   "})").error, "BAD_PARAMS");
    EXPECT_EQ(parse_tool_action("{'tool': 'FactProbe'}").error, "BAD_TOOL_JSON");
    EXPECT_EQ(parse_tool_action(R"(["FactProbe"])").error, "BAD_TOOL_JSON");
    EXPECT_EQ(parse_tool_action(R"({"tool":7})").error, "BAD_TOOL_JSON");
}

TEST(ParseToolAction, QueryIsTrimmed) {
    const auto a = parse_tool_action(R"({"tool":"FactProbe","query":"  who filmed it  "})");
    ASSERT_TRUE(a);
    EXPECT_EQ(std::get<FactProbeParams>(a->params).query, "who filmed it");
}

TEST(ParserProperties, RandomBytesNeverCrashAndVerdictIsConsistent) {
    std::mt19937_64 rng(11);
    const std::vector<std::string> atoms{"<think>", "</think>", "<tool_call>", "</tool_call>", "<answer>",
                                         "</answer>", "fake", "real", "{", "}", "<", ">", " ", "x", "\xff"};
    for (int i = 0; i < 2000; ++i) {
        std::string raw;
        const int len = static_cast<int>(rng() % 24);
        for (int k = 0; k < len; ++k) {
            if (rng() % 3 == 0) raw += static_cast<char>(rng() % 256);
            else raw += atoms[rng() % atoms.size()];
        }
        const ParsedTurn t = parse_turn(raw);
        for (auto stage : {StageExpectation::Stage1, StageExpectation::Stage2}) {
            const auto v = validate_turn(t, stage);
            EXPECT_EQ(v.well_formed, v.violations.empty());
        }
        for (std::size_t s = 1; s < t.span_map.size(); ++s)
            EXPECT_LE(t.span_map[s - 1].byte_end, t.span_map[s].byte_start);
    }
}

TEST(ParserProperties, RoundTripOfWellFormedTurn) {
    const std::string raw = "<think>plan</think>\n<tool_call>" + kProbe + "</tool_call>";
    const ParsedTurn t = parse_turn(raw);
    ASSERT_TRUE(validate_turn(t, StageExpectation::Stage1).well_formed);
    const ParsedTurn again = parse_turn(render_turn(t));
    EXPECT_EQ(again.think_text, t.think_text);
    EXPECT_EQ(again.tool_call_raw, t.tool_call_raw);
    EXPECT_EQ(render_turn(again), render_turn(t));
}

TEST(ParserProperties, DeletingAClosingTagBreaksWellFormedness) {
    const std::string raw = "<think>t</think><answer>fake</answer>";
    for (Tag tag : {Tag::Think, Tag::Answer}) {
        std::string damaged = raw;
        const auto p = damaged.find(close_tag(tag));
        damaged.erase(p, close_tag(tag).size());
        EXPECT_FALSE(check(damaged, StageExpectation::Stage1).well_formed) << damaged;
    }
}
