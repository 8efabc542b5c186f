#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "factguard/error.hpp"
#include "factguard/forge.hpp"
#include "factguard/serialization.hpp"
#include "synthetic.hpp"

using namespace factguard;
using namespace factguard::cli;
using factguard::testing::TempDir;
using factguard::testing::read_file;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RuntimeOptions runtime_for(const factguard::testing::Corpus& c, const fs::path& artifacts) {
    RuntimeOptions rt;
    rt.mock_script = c.mock_script;
    rt.search_fixtures = c.search_fixtures;
    rt.artifacts = artifacts;
    rt.concurrency = 4;
    return rt;
}

int exit_code_of(const std::string& args) {
    const std::string cmd = std::string(FACTGUARD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Cli, VerifyThenEvalMatchesPlan) {
    TempDir dir;
    const auto corpus = factguard::testing::make_corpus(dir / "corpus", 40, 17);
    std::ostringstream log;

    VerifyOptions v;
    v.manifest = corpus.manifest;
    v.out = dir / "verify.jsonl";
    v.runtime = runtime_for(corpus, dir / "artifacts");
    ASSERT_EQ(run_verify(v, log), 0);
    const auto rows = read_jsonl(v.out);
    ASSERT_EQ(rows.size(), 40u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Trajectory t = trajectory_from_json(rows[i]);
        EXPECT_EQ(t.item_id, corpus.planned[i].item.id);
        EXPECT_EQ(t.verdict, corpus.planned[i].verdict) << t.item_id;
        EXPECT_EQ(t.tool_used(), corpus.planned[i].uses_tool) << t.item_id;
    }

    EvalOptions e;
    e.manifest = corpus.manifest;
    e.predictions = v.out;
    e.out = dir / "report";
    ASSERT_EQ(run_eval(e, log), 0);
    const json report = json::parse(read_file(e.out / "report.json"));
    const auto plan = factguard::testing::planned_counts(corpus.planned);
    EXPECT_EQ(report["metrics"]["tp"], plan.tp);
    EXPECT_EQ(report["metrics"]["fp"], plan.fp);
    EXPECT_EQ(report["metrics"]["fn"], plan.fn);
    EXPECT_EQ(report["metrics"]["tn"], plan.tn);
    EXPECT_EQ(report["metrics"]["n_unparseable"], plan.unparseable);
}

TEST(Cli, EvalSplitSweepAndAudit) {
    TempDir dir;
    const auto corpus = factguard::testing::make_corpus(dir / "corpus", 20, 3);
    std::ostringstream log;
    VerifyOptions v;
    v.manifest = corpus.manifest;
    v.out = dir / "verify.jsonl";
    v.runtime = runtime_for(corpus, dir / "artifacts");
    run_verify(v, log);

    std::ofstream(dir / "judge.json")
        << R"({"default": {"text": "{\"faithfulness\": 4, \"logical_consistency\": 4, \"evidence_grounding\": 3, \"rationale\": \"fine\"}"}})";
    EvalOptions e;
    e.manifest = corpus.manifest;
    e.predictions = v.out;
    e.out = dir / "report";
    e.test_frac = 0.15;
    e.sweep = "1:2,2:1";
    e.sweep_predictions = {v.out, v.out};
    e.audit = true;
    e.judge_script = dir / "judge.json";
    ASSERT_EQ(run_eval(e, log), 0);
    const json report = json::parse(read_file(e.out / "report.json"));
    EXPECT_EQ(report["metrics"]["n"], 3);
    EXPECT_EQ(report["train_size"], 17);
    EXPECT_TRUE(fs::exists(e.out / "cost_sweep.csv"));
    EXPECT_TRUE(fs::exists(e.out / "audits.csv"));

    e.sweep_predictions = {v.out};
    EXPECT_THROW(run_eval(e, log), Error);
}

TEST(Cli, RolloutScoreDeterministic) {
    TempDir dir;
    const auto corpus = factguard::testing::make_corpus(dir / "corpus", 12, 5);
    std::ostringstream log;
    RolloutOptions r;
    r.manifest = corpus.manifest;
    r.out = dir / "groups.jsonl";
    r.runtime = runtime_for(corpus, dir / "artifacts");
    r.group_size = 4;
    ASSERT_EQ(run_rollout(r, log), 0);

    ScoreOptions s;
    s.groups = r.out;
    s.out = dir / "scored.jsonl";
    ASSERT_EQ(run_score(s, log), 0);
    const std::string first = read_file(s.out);

    r.runtime.concurrency = 1;
    ASSERT_EQ(run_rollout(r, log), 0);
    ASSERT_EQ(run_score(s, log), 0);
    EXPECT_EQ(read_file(s.out), first);

    const auto rows = read_jsonl(s.out);
    ASSERT_EQ(rows.size(), 12u);
    for (const auto& row : rows) {
        // Scripted episodes are identical within a group.
        EXPECT_TRUE(row["degenerate"]);
        EXPECT_EQ(row["trajectories"].size(), 4u);
        EXPECT_EQ(row["grpo"]["objective"], 0.0);
    }
}

TEST(Cli, ServeStdio) {
    std::istringstream in(R"({"id":"1","op":"ping"})" "\n");
    std::ostringstream out, log;
    ServeOptions opts;
    opts.stdio = true;
    ASSERT_EQ(run_serve(opts, in, out, log), 0);
    EXPECT_EQ(json::parse(out.str())["result"]["pong"], true);
    opts.port = 0;
    EXPECT_THROW(run_serve(opts, in, out, log), Error);
}

TEST(Cli, ForgePipeline) {
    TempDir dir;
    const auto corpus = factguard::testing::make_corpus(dir / "corpus", 30, 11);
    std::ostringstream log;
    ForgeGenerateOptions g;
    g.manifest = corpus.manifest;
    g.out = dir / "teacher.jsonl";
    g.runtime = runtime_for(corpus, dir / "artifacts");
    ASSERT_EQ(run_forge_generate(g, log), 0);

    ForgeFilterOptions f;
    f.in = g.out;
    f.kept = dir / "kept.jsonl";
    f.rejected = dir / "rejected.jsonl";
    ASSERT_EQ(run_forge_filter(f, log), 0);
    std::size_t expected_kept = 0;
    for (const auto& p : corpus.planned) expected_kept += p.verdict == p.item.label;
    EXPECT_EQ(read_jsonl(f.kept).size(), expected_kept);
    EXPECT_EQ(read_jsonl(f.kept).size() + read_jsonl(f.rejected).size(), 30u);

    ForgeEmitOptions e;
    e.in = f.kept;
    e.out = dir / "sft.jsonl";
    ASSERT_EQ(run_forge_emit(e, log), 0);
    const json stats = json::parse(read_file(dir / "sft.jsonl.stats.json"));
    EXPECT_EQ(stats["total"], expected_kept);
    EXPECT_EQ(read_file(e.out).find(std::string(kLabelHintMarker)), std::string::npos);

    e.in = f.rejected;
    EXPECT_THROW(run_forge_emit(e, log), Error);
}

TEST(Cli, BackendSelection) {
    EXPECT_THROW(make_backend("mock", {}), Error);
    EXPECT_THROW(make_backend("grpc", "x"), Error);
    RuntimeOptions rt;
    rt.search = "bing";
    EXPECT_THROW(make_registry(rt), Error);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(exit_code_of("--help"), 0);
    EXPECT_EQ(exit_code_of(""), 2);
    EXPECT_EQ(exit_code_of("verify --manifest"), 2);
    EXPECT_EQ(exit_code_of("score --groups /nonexistent/g.jsonl --out /tmp/x.jsonl"), 1);
    EXPECT_EQ(exit_code_of("serve-rewards"), 2);
}
