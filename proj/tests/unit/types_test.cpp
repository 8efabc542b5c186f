#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/serialization.hpp"
#include "factguard/types.hpp"

using namespace factguard;
using nlohmann::json;

namespace {

json valid_row() {
    return {{"id", "a"},
            {"video_path", "videos/a.mp4"},
            {"duration_s", 12.0},
            {"transcript", "speech"},
            {"metadata_text", "title #kw"},
            {"label", "fake"},
            {"published_at", "2023-01-01T00:00:00Z"},
            {"dataset", "FakeSV"}};
}

std::string validation_code(const json& row, std::string* field = nullptr) {
    try {
        validate_news_item(row);
    } catch (const ValidationError& e) {
        if (field) *field = e.field();
        return e.code();
    }
    return "";
}

} // namespace

TEST(NewsItem, ValidRowMapsLabel) {
    const NewsItem item = validate_news_item(valid_row());
    EXPECT_EQ(item.id, "a");
    EXPECT_EQ(item.label, Label::Fake);
    EXPECT_DOUBLE_EQ(item.video_duration_s, 12.0);
    EXPECT_EQ(item.source_dataset, SourceDataset::FakeSV);
    EXPECT_EQ(format_rfc3339(item.published_at), "2023-01-01T00:00:00Z");
}

TEST(NewsItem, LabelIsCaseInsensitive) {
    auto row = valid_row();
    row["label"] = "  REAL ";
    EXPECT_EQ(validate_news_item(row).label, Label::Real);
}

TEST(NewsItem, RejectsUnknownLabel) {
    auto row = valid_row();
    row["label"] = "maybe";
    std::string field;
    EXPECT_EQ(validation_code(row, &field), "BAD_LABEL");
    EXPECT_EQ(field, "label");
}

TEST(NewsItem, RejectsNegativeDuration) {
    auto row = valid_row();
    row["duration_s"] = -1;
    std::string field;
    EXPECT_EQ(validation_code(row, &field), "BAD_DURATION");
    EXPECT_EQ(field, "duration_s");
}

TEST(NewsItem, RejectsMissingTimestamp) {
    auto row = valid_row();
    row.erase("published_at");
    std::string field;
    EXPECT_EQ(validation_code(row, &field), "MISSING_FIELD");
    EXPECT_EQ(field, "published_at");
}

TEST(NewsItem, RejectsBadTimestamp) {
    auto row = valid_row();
    row["published_at"] = "2023-02-30T00:00:00Z";
    EXPECT_EQ(validation_code(row), "BAD_TIMESTAMP");
    row["published_at"] = "yesterday";
    EXPECT_EQ(validation_code(row), "BAD_TIMESTAMP");
}

TEST(NewsItem, ValidationIsIdempotent) {
    const NewsItem once = validate_news_item(valid_row());
    const NewsItem twice = validate_news_item(to_json(once));
    EXPECT_EQ(once, twice);
}

TEST(Timestamp, ParsesOffsetsAndFractions) {
    const auto a = parse_rfc3339("2023-01-01T02:00:00+02:00");
    const auto b = parse_rfc3339("2023-01-01T00:00:00Z");
    ASSERT_TRUE(a && b);
    EXPECT_EQ(*a, *b);
    const auto c = parse_rfc3339("2023-01-01T00:00:00.250Z");
    ASSERT_TRUE(c);
    EXPECT_EQ(format_rfc3339(*c), "2023-01-01T00:00:00.250Z");
    EXPECT_FALSE(parse_rfc3339("2023-01-01 00:00:00"));
    EXPECT_FALSE(parse_rfc3339("2023-13-01T00:00:00Z"));
}

TEST(AgentState, LegalTransitionsOnly) {
    AgentState direct;
    direct.transition(Stage::Done);
    EXPECT_THROW(direct.transition(Stage::Refining), Error);

    AgentState tool;
    tool.transition(Stage::AwaitingTool);
    EXPECT_THROW(tool.transition(Stage::Done), Error);
    tool.transition(Stage::Refining);
    tool.transition(Stage::Done);

    AgentState skip;
    EXPECT_THROW(skip.transition(Stage::Refining), Error);
}

TEST(AgentState, BudgetNeverNegative) {
    AgentState s({{ToolId::ClipScout, 1}});
    EXPECT_TRUE(s.try_consume(ToolId::ClipScout));
    EXPECT_FALSE(s.try_consume(ToolId::ClipScout));
    EXPECT_FALSE(s.try_consume(ToolId::ClipScout));
    EXPECT_EQ(s.remaining(ToolId::ClipScout), 0);
    EXPECT_EQ(s.remaining(ToolId::FactProbe), std::nullopt);
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(s.try_consume(ToolId::FactProbe));
}

TEST(TrajectoryInvariants, OneTurnDirectAnswerIsClean) {
    Trajectory t;
    t.turns.resize(1);
    t.verdict = Label::Fake;
    t.format_verdict = {true, true, {}};
    EXPECT_TRUE(assert_trajectory_wellformed(t).empty());
}

TEST(TrajectoryInvariants, ActionWithoutObservation) {
    Trajectory t;
    t.turns.resize(2);
    t.action = ToolAction{FactProbeParams{"q"}};
    EXPECT_EQ(assert_trajectory_wellformed(t), std::vector<std::string>{"OBS_MISSING"});
}

TEST(TrajectoryInvariants, ThreeTurns) {
    Trajectory t;
    t.turns.resize(3);
    EXPECT_EQ(assert_trajectory_wellformed(t), std::vector<std::string>{"TURN_COUNT"});
}

TEST(TrajectoryInvariants, ObservationPayloadMustMatchTool) {
    Trajectory t;
    t.turns.resize(2);
    t.action = ToolAction{ClipScoutParams{1, 2}};
    Observation obs;
    obs.tool_id = ToolId::ClipScout;
    obs.ok = true;
    obs.text_report = "wrong payload";
    t.observation = obs;
    EXPECT_EQ(assert_trajectory_wellformed(t), std::vector<std::string>{"OBS_PAYLOAD"});

    t.observation->ok = false;
    t.observation->text_report.reset();
    t.observation->error_note = "DECODE_FAILURE";
    EXPECT_TRUE(assert_trajectory_wellformed(t).empty());
}

TEST(TrajectoryInvariants, VerdictFollowsParseability) {
    Trajectory t;
    t.turns.resize(1);
    t.verdict = Label::Real;
    t.format_verdict.answer_parseable = false;
    EXPECT_EQ(assert_trajectory_wellformed(t), std::vector<std::string>{"VERDICT_MISMATCH"});
}
