#include <fstream>

#include <gtest/gtest.h>

#include "factguard/error.hpp"
#include "factguard/serialization.hpp"
#include "factguard/turn_parser.hpp"
#include "synthetic.hpp"

using namespace factguard;
using factguard::testing::TempDir;
using nlohmann::json;

namespace {

Trajectory full_trajectory() {
    Trajectory t;
    t.item_id = "vid-9";
    t.seed = 42;
    for (const char* raw : {R"(<think>a</think><tool_call>{"tool":"ClipScout","start_s":1.5,"end_s":3}</tool_call>)",
                            R"(<think>b</think><tool_call>{"tool":"FactProbe","query":"again"}</tool_call>)"}) {
        Turn turn;
        turn.raw_text = raw;
        turn.parsed = parse_turn(raw);
        t.turns.push_back(turn);
    }
    t.action = ToolAction{ClipScoutParams{1.5, 3}};
    Observation obs;
    obs.tool_id = ToolId::ClipScout;
    obs.ok = true;
    obs.frame_grid = FrameGrid{1.5, 3, {1.6875, 2.0625, 2.4375, 2.8125}, "artifacts/g.png", 64, 36};
    obs.latency_ms = 12;
    t.observation = obs;
    FollowupAttempt f;
    f.tool_call_raw = R"({"tool":"FactProbe","query":"again"})";
    f.action = ToolAction{FactProbeParams{"again"}};
    f.observation.tool_id = ToolId::FactProbe;
    f.observation.error_note = "BUDGET_EXHAUSTED";
    t.followup = f;
    t.token_logprobs = TrajectoryLogProbs{-3.25, -3.25, -4.5, 40};
    t.format_verdict.violations = {FormatViolation::MissingAnswerAndTool};
    return t;
}

std::string error_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST(Serialization, TrajectoryRoundTrip) {
    const Trajectory t = full_trajectory();
    const json j = to_json(t);
    EXPECT_EQ(trajectory_from_json(j), t);
    EXPECT_EQ(trajectory_from_json(json::parse(j.dump())), t);
    EXPECT_EQ(j["observation"]["frame_grid"]["image"], "artifacts/g.png");
    EXPECT_EQ(j["format_verdict"]["violations"][0], "MISSING_ANSWER_AND_TOOL");
    EXPECT_FALSE(j["turns"][0].contains("parsed"));
}

TEST(Serialization, MinimalTrajectoryRoundTrip) {
    Trajectory t;
    t.item_id = "m";
    t.turns.push_back({"assistant", "nothing", parse_turn("nothing")});
    t.format_verdict.violations = {FormatViolation::MissingThink, FormatViolation::MissingAnswerAndTool};
    EXPECT_EQ(trajectory_from_json(to_json(t)), t);
    EXPECT_TRUE(to_json(t)["seed"].is_null());
}

TEST(Serialization, GroupRoundTrip) {
    TrajectoryGroup g;
    g.item_id = "vid-9";
    g.truth = Label::Fake;
    g.beta = 0.1;
    g.trajectories = {full_trajectory(), full_trajectory()};
    g.rewards = {0.1, -0.2};
    g.advantages = {1, -1};
    EXPECT_EQ(group_from_json(to_json(g)), g);
}

TEST(Serialization, SchemaErrors) {
    json j = to_json(full_trajectory());
    j.erase("turns");
    EXPECT_EQ(error_code([&] { trajectory_from_json(j); }), "SCHEMA");
    j = to_json(full_trajectory());
    j["verdict"] = "perhaps";
    EXPECT_EQ(error_code([&] { trajectory_from_json(j); }), "SCHEMA");
    j = to_json(full_trajectory());
    j["format_verdict"]["violations"] = {"NOT_A_CODE"};
    EXPECT_EQ(error_code([&] { trajectory_from_json(j); }), "SCHEMA");
    EXPECT_EQ(error_code([] { tool_action_from_json(json{{"tool", "Radar"}}); }), "SCHEMA");
    EXPECT_EQ(error_code([] { logprobs_from_json(json{{"sum_logp_policy", "x"}}); }), "SCHEMA");
}

TEST(Serialization, JsonlFiles) {
    TempDir dir;
    const std::vector<json> rows{{{"a", 1}}, {{"b", "\xff bad utf8"}}};
    write_jsonl(dir / "x.jsonl", rows);
    const auto back = read_jsonl(dir / "x.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], rows[0]);
    EXPECT_FALSE(std::filesystem::exists(dir / "x.jsonl.tmp"));

    std::ofstream(dir / "bad.jsonl") << "{\"a\":1}\n\n{broken\n";
    try {
        read_jsonl(dir / "bad.jsonl");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), "SCHEMA");
        EXPECT_EQ(e.field(), "line 3");
    }
    EXPECT_EQ(error_code([&] { read_jsonl(dir / "missing.jsonl"); }), "IO");
}

TEST(Serialization, NewsItemManifestForm) {
    NewsItem item;
    item.id = "a";
    item.video_path = "videos/a.mp4";
    item.video_duration_s = 12;
    item.label = Label::Fake;
    item.published_at = parse_rfc3339("2023-01-01T00:00:00Z").value();
    item.source_dataset = SourceDataset::FakeSV;
    const json j = to_json(item);
    EXPECT_EQ(j["label"], "fake");
    EXPECT_EQ(j["published_at"], "2023-01-01T00:00:00Z");
    EXPECT_EQ(validate_news_item(j), item);
}
