#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/eval.hpp"
#include "factguard/serialization.hpp"
#include "factguard/turn_parser.hpp"
#include "synthetic.hpp"

using namespace factguard;
using factguard::testing::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string error_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

json row(const std::string& id, const std::string& ts = "2023-01-01T00:00:00Z") {
    return {{"id", id},          {"video_path", "videos/" + id + ".mp4"}, {"duration_s", 12.0},
            {"transcript", "t"}, {"metadata_text", "m"},                  {"label", "fake"},
            {"published_at", ts}, {"dataset", "FakeSV"}};
}

void write_rows(const fs::path& path, const std::vector<json>& rows) {
    std::ofstream out(path);
    for (const auto& r : rows) out << r.dump() << '\n';
}

NewsItem item_at(const std::string& id, int minutes) {
    NewsItem it;
    it.id = id;
    it.video_duration_s = 1;
    it.published_at = parse_rfc3339("2023-01-01T00:00:00Z").value() + std::chrono::minutes(minutes);
    return it;
}

std::vector<Prediction> preds(const std::vector<std::optional<Label>>& verdicts) {
    std::vector<Prediction> out;
    for (std::size_t i = 0; i < verdicts.size(); ++i) out.push_back({"i" + std::to_string(i), verdicts[i]});
    return out;
}

std::vector<TruthRow> truths(const std::vector<Label>& labels) {
    std::vector<TruthRow> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({"i" + std::to_string(i), labels[i]});
    return out;
}

constexpr auto F = Label::Fake;
constexpr auto R = Label::Real;

} // namespace

TEST(Manifest, LoadsAndResolvesPaths) {
    TempDir dir;
    write_rows(dir / "m.jsonl", {row("a"), row("b"), row("c")});
    const auto items = load_manifest(dir / "m.jsonl");
    ASSERT_EQ(items.size(), 3u);
    EXPECT_EQ(items[0].video_path, dir.path() / "videos/a.mp4");
    EXPECT_EQ(items[0].source_dataset, SourceDataset::FakeSV);
}

TEST(Manifest, SchemaErrorNamesLineAndField) {
    TempDir dir;
    json bad = row("b");
    bad.erase("published_at");
    write_rows(dir / "m.jsonl", {row("a"), bad});
    try {
        load_manifest(dir / "m.jsonl");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), "SCHEMA");
        EXPECT_EQ(e.field(), "line 2: published_at");
    }
}

TEST(Manifest, DuplicateIdAndRoundTrip) {
    TempDir dir;
    write_rows(dir / "m.jsonl", {row("a"), row("a")});
    EXPECT_EQ(error_code([&] { load_manifest(dir / "m.jsonl"); }), "DUPLICATE_ID");

    std::vector<NewsItem> items{item_at("x", 1), item_at("y", 2)};
    for (auto& it : items) it.video_path = dir.path() / (it.id + ".mp4");
    write_manifest(dir / "out.jsonl", items);
    EXPECT_EQ(load_manifest(dir / "out.jsonl"), items);
}

TEST(Split, TwentyItems) {
    std::vector<NewsItem> items;
    for (int i = 0; i < 20; ++i) items.push_back(item_at(fmt::format("id{:02d}", 19 - i), 100 - i));
    const auto s = temporal_split(items, 0.15);
    ASSERT_EQ(s.test.size(), 3u);
    EXPECT_EQ(s.train.size(), 17u);
    EXPECT_EQ(s.test[0].id, "id17");
    EXPECT_EQ(s.test[2].id, "id19");
}

TEST(Split, EdgeCases) {
    const auto one = temporal_split({item_at("a", 0)}, 0.15);
    EXPECT_TRUE(one.train.empty());
    EXPECT_EQ(one.test.size(), 1u);

    std::vector<NewsItem> tied;
    for (const char* id : {"d", "b", "a", "c", "e", "f", "g"}) tied.push_back(item_at(id, 0));
    const auto s = temporal_split(tied, 0.15);
    ASSERT_EQ(s.test.size(), 2u);
    EXPECT_EQ(s.test[0].id, "f");
    EXPECT_EQ(s.test[1].id, "g");

    EXPECT_EQ(error_code([] { temporal_split({}, 0.15); }), "EMPTY_INPUT");
    EXPECT_EQ(error_code([] { temporal_split({item_at("a", 0)}, 0.0); }), "BAD_FRACTION");
    EXPECT_EQ(error_code([] { temporal_split({item_at("a", 0)}, 1.0); }), "BAD_FRACTION");
}

TEST(Metrics, ConfusionExample) {
    const auto m = compute_metrics(preds({F, F, F, R, R, R}), truths({F, F, R, F, R, R}));
    EXPECT_EQ(m.tp, 2);
    EXPECT_EQ(m.fp, 1);
    EXPECT_EQ(m.fn, 1);
    EXPECT_EQ(m.tn, 2);
    EXPECT_NEAR(m.accuracy, 4.0 / 6, 1e-12);
    EXPECT_NEAR(m.precision, 2.0 / 3, 1e-12);
    EXPECT_NEAR(m.recall, 2.0 / 3, 1e-12);
    EXPECT_NEAR(m.f1, 2.0 / 3, 1e-12);
}

TEST(Metrics, PerfectAndUndefined) {
    const auto perfect = compute_metrics(preds({F, R}), truths({F, R}));
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.f1, 1.0);

    const auto none = compute_metrics(preds({R, R}), truths({F, R}));
    EXPECT_TRUE(none.precision_undefined);
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_TRUE(none.f1_undefined);
    EXPECT_FALSE(none.recall_undefined);
}

TEST(Metrics, UnparseableCounting) {
    const auto m = compute_metrics(preds({std::nullopt, std::nullopt, F}), truths({F, R, F}));
    EXPECT_EQ(m.n_unparseable, 2);
    EXPECT_EQ(m.n_unparseable_fake, 1);
    EXPECT_EQ(m.tp + m.fp + m.fn + m.tn + m.n_unparseable, m.n);
    EXPECT_NEAR(m.accuracy, 1.0 / 3, 1e-12);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 0.5);
}

TEST(Metrics, IdMismatch) {
    EXPECT_EQ(error_code([] { compute_metrics(preds({F}), truths({F, R})); }), "ID_MISMATCH");
    EXPECT_EQ(error_code([] { compute_metrics({{"zz", F}}, truths({F})); }), "ID_MISMATCH");
    EXPECT_EQ(error_code([] { compute_metrics({{"i0", F}, {"i0", R}}, truths({F, R})); }), "ID_MISMATCH");
}

TEST(Predictions, LoadBothShapes) {
    TempDir dir;
    std::ofstream(dir / "p.jsonl") << R"({"item_id":"a","verdict":"fake"})" << "\n"
                                   << R"({"id":"b","verdict":null})" << "\n";
    const auto p = load_predictions(dir / "p.jsonl");
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0].verdict, Label::Fake);
    EXPECT_FALSE(p[1].verdict);
    std::ofstream(dir / "bad.jsonl") << R"({"id":"b","verdict":"unsure"})" << "\n";
    EXPECT_EQ(error_code([&] { load_predictions(dir / "bad.jsonl"); }), "SCHEMA");
}

TEST(CostSweep, RatiosAndRows) {
    EXPECT_EQ(parse_cost_ratios("1:2,1:1, 2:1"),
              (std::vector<CostRatio>{{1, 2}, {1, 1}, {2, 1}}));
    EXPECT_EQ(CostRatio({1.5, 2}).label(), "1.5:2");
    EXPECT_EQ(error_code([] { parse_cost_ratios("1-2"); }), "BAD_RATIO");
    EXPECT_EQ(error_code([] { parse_cost_ratios("1:x"); }), "BAD_RATIO");
    EXPECT_EQ(error_code([] { parse_cost_ratios("1:2,"); }), "BAD_RATIO");

    const auto p = preds({F, R, F});
    const auto t = truths({F, F, R});
    const auto rows = cost_sweep({{{1, 2}, p}, {{1, 1}, p}, {{2, 1}, p}}, t);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].metrics, rows[2].metrics);
}

TEST(CostSweep, PublishedReferenceRow) {
    const auto& row = kReferenceCostSensitivity[2];
    EXPECT_STREQ(row.dataset, "FakeSV");
    EXPECT_STREQ(row.ratio, "2:1");
    EXPECT_EQ(row.precision, 83.2);
    EXPECT_EQ(row.recall, 75.0);
}

TEST(Audit, ParseResponse) {
    const auto s = parse_audit_response(
        "```json\n{\"faithfulness\":4,\"logical_consistency\":5,\"evidence_grounding\":3,\"rationale\":\"ok\"}\n```");
    ASSERT_TRUE(s);
    EXPECT_EQ(s->logical_consistency, 5);
    EXPECT_EQ(s->rationale, "ok");
    EXPECT_FALSE(parse_audit_response(R"({"faithfulness":6,"logical_consistency":5,"evidence_grounding":3})"));
    EXPECT_FALSE(parse_audit_response(R"({"faithfulness":4.5,"logical_consistency":5,"evidence_grounding":3})"));
    EXPECT_FALSE(parse_audit_response("Scores: 4, 5, 3"));
}

TEST(Audit, JudgeFlow) {
    Trajectory t;
    t.item_id = "x";
    const std::string raw = "<think>The caption names the wrong city.</think><answer>fake</answer>";
    t.turns.push_back({"assistant", raw, parse_turn(raw)});
    t.verdict = Label::Fake;
    const auto templates = default_templates();

    const auto req = build_audit_prompt(t, templates);
    ASSERT_EQ(req.messages.size(), 1u);
    EXPECT_NE(req.messages[0].text.find("Turn 1: The caption names the wrong city."), std::string::npos);
    EXPECT_NE(req.messages[0].text.find("(no tool was used)"), std::string::npos);

    MockBackend retry(json{{"responses",
                            {"I think it is good.",
                             R"({"faithfulness":4,"logical_consistency":4,"evidence_grounding":2,"rationale":"r"})"}}});
    const auto score = audit_reasoning(t, Label::Fake, retry, templates);
    EXPECT_EQ(score.item_id, "x");
    EXPECT_EQ(score.evidence_grounding, 2);
    EXPECT_EQ(retry.calls(), 2u);

    MockBackend hopeless(json{{"default", "no"}});
    EXPECT_EQ(error_code([&] { audit_reasoning(t, Label::Fake, hopeless, templates); }), "JUDGE_UNPARSEABLE");
    EXPECT_EQ(hopeless.calls(), 2u);
    EXPECT_EQ(error_code([&] { audit_reasoning(t, Label::Real, hopeless, templates); }), "PRECONDITION");
}

TEST(Report, FilesAndDeterminism) {
    TempDir a, b;
    ReportInput in;
    in.run_name = "run,1";
    in.metrics = compute_metrics(preds({F, F, F, R, R, R}), truths({F, F, R, F, R, R}));
    in.sweep = cost_sweep({{{1, 2}, preds({F, F})}, {{2, 1}, preds({F, R})}}, truths({F, R}));
    in.audits = {{"x", 4, 5, 3, "cites \"frames\""}};
    in.train_size = 17;
    const auto files = emit_report(in, a.path());
    emit_report(in, b.path());
    EXPECT_EQ(files.size(), 5u);
    for (const auto& f : files)
        EXPECT_EQ(factguard::testing::read_file(f), factguard::testing::read_file(b / f.filename().string()))
            << f;
    const std::string metrics = factguard::testing::read_file(a / "metrics.csv");
    EXPECT_EQ(metrics,
              "run,n,tp,fp,fn,tn,n_unparseable,accuracy,precision,recall,f1\n"
              "\"run,1\",6,2,1,1,2,0,0.666667,0.666667,0.666667,0.666667\n");
    EXPECT_EQ(factguard::testing::read_file(a / "cost_sweep.csv"),
              "ratio,precision,recall\n1:2,0.500000,1.000000\n2:1,1.000000,1.000000\n");
    const json report = json::parse(factguard::testing::read_file(a / "report.json"));
    EXPECT_EQ(report["run"], "run,1");
    EXPECT_EQ(report["train_size"], 17);

    ReportInput bare;
    EXPECT_EQ(emit_report(bare, a / "bare").size(), 2u);
}
