#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "factguard/error.hpp"

using namespace factguard::cli;

namespace {

void add_runtime(CLI::App* cmd, RuntimeOptions& rt) {
    cmd->add_option("--backend", rt.backend, "Model backend: mock or http")->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--mock-script", rt.mock_script, "Response script for the mock backend");
    cmd->add_option("--search", rt.search, "Search provider: stub or http")->check(CLI::IsMember({"stub", "http"}));
    cmd->add_option("--search-fixtures", rt.search_fixtures, "Fixture directory for the stub search provider");
    cmd->add_option("--blocklist", rt.blocklist, "Host-suffix blocklist file");
    cmd->add_option("--artifacts", rt.artifacts, "Directory for ClipScout frame grids");
    cmd->add_option("--templates", rt.templates, "Directory of prompt templates");
    cmd->add_option("--concurrency", rt.concurrency, "Episodes in flight")->check(CLI::PositiveNumber);
    cmd->add_option("--clip-budget", rt.clip_budget, "ClipScout calls per episode")->check(CLI::NonNegativeNumber);
    cmd->add_option("--resolution-cap", rt.resolution_cap, "Longest side of a frame grid")->check(CLI::PositiveNumber);
    cmd->add_flag("--frozen-clock,!--live-clock", rt.frozen_clock, "Stamp tool latency from a frozen clock");
}

void on_signal(int) { serve_stop_flag().store(true); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"factguard: agentic verification of short news videos"};
    app.require_subcommand(1);

    VerifyOptions verify;
    auto* v = app.add_subcommand("verify", "Run one episode per manifest item");
    v->add_option("--manifest", verify.manifest)->required();
    v->add_option("--out", verify.out)->required();
    v->add_option("--temperature", verify.temperature)->check(CLI::NonNegativeNumber);
    v->add_option("--seed", verify.seed);
    add_runtime(v, verify.runtime);

    RolloutOptions rollout;
    auto* r = app.add_subcommand("rollout", "Sample a group of trajectories per item");
    r->add_option("--manifest", rollout.manifest)->required();
    r->add_option("--out", rollout.out)->required();
    r->add_option("--group-size", rollout.group_size)->check(CLI::Range(2, 1024));
    r->add_option("--temperature", rollout.temperature)->check(CLI::NonNegativeNumber);
    r->add_option("--seed", rollout.seed, "Seed of the first episode; episode i uses seed + i");
    r->add_option("--config", rollout.config, "Rewards TOML (beta is recorded on each group)");
    r->add_option("--reference-backend", rollout.reference_backend, "Scores turns for the reference log-probs");
    r->add_option("--reference-script", rollout.reference_script);
    add_runtime(r, rollout.runtime);

    ScoreOptions score;
    auto* s = app.add_subcommand("score", "Rewards, advantages and objective for rollout groups");
    s->add_option("--groups", score.groups)->required();
    s->add_option("--config", score.config, "Rewards TOML");
    s->add_option("--out", score.out)->required();

    ServeOptions serve;
    auto* sv = app.add_subcommand("serve-rewards", "Serve the reward engine over newline-delimited JSON");
    sv->add_flag("--stdio", serve.stdio);
    sv->add_option("--socket", serve.socket, "Unix socket path");
    sv->add_option("--port", serve.port, "TCP port on 127.0.0.1");
    sv->add_option("--config", serve.config, "Rewards TOML with the default coefficients");

    EvalOptions eval;
    auto* e = app.add_subcommand("eval", "Metrics, cost-ratio sweeps and reasoning audits");
    e->add_option("--manifest", eval.manifest)->required();
    e->add_option("--predictions", eval.predictions, "verify output or {id, verdict} rows")->required();
    e->add_option("--out", eval.out, "Report directory")->required();
    e->add_option("--name", eval.name, "Run name in the report");
    std::string split;
    e->add_option("--split", split)->check(CLI::IsMember({"temporal"}));
    double test_frac = 0.15;
    e->add_option("--test-frac", test_frac)->check(CLI::Range(0.0, 1.0));
    e->add_option("--sweep", eval.sweep, "Cost ratios alpha:gamma, comma separated");
    e->add_option("--sweep-predictions", eval.sweep_predictions, "One predictions file per ratio")->delimiter(',');
    e->add_flag("--audit", eval.audit, "Audit the reasoning of correct predictions");
    e->add_option("--judge-backend", eval.judge_backend)->check(CLI::IsMember({"mock", "http"}));
    e->add_option("--judge-script", eval.judge_script, "Response script for the mock judge");
    e->add_option("--templates", eval.templates);
    e->add_option("--concurrency", eval.concurrency)->check(CLI::PositiveNumber);

    auto* forge = app.add_subcommand("forge", "Build the agentic fine-tuning corpus");
    forge->require_subcommand(1);
    ForgeGenerateOptions gen;
    auto* fg = forge->add_subcommand("generate", "Teacher trajectories with the label revealed");
    fg->add_option("--manifest", gen.manifest)->required();
    fg->add_option("--out", gen.out)->required();
    fg->add_option("--teacher-backend", gen.runtime.backend)->check(CLI::IsMember({"mock", "http"}));
    fg->add_option("--seed", gen.seed);
    add_runtime(fg, gen.runtime);
    ForgeFilterOptions filt;
    auto* ff = forge->add_subcommand("filter", "Apply the structure, tool, decision and review rules");
    ff->add_option("--in", filt.in)->required();
    ff->add_option("--review", filt.review, "JSONL of {item_id, flag}");
    ff->add_option("--kept", filt.kept)->required();
    ff->add_option("--rejected", filt.rejected)->required();
    ForgeEmitOptions emit;
    auto* fe = forge->add_subcommand("emit", "Write the fine-tuning conversations");
    fe->add_option("--in", emit.in)->required();
    fe->add_option("--out", emit.out)->required();
    fe->add_option("--templates", emit.templates);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        // Help and version requests exit 0; every other parse failure is a usage error.
        return app.exit(err) == 0 ? 0 : 2;
    }
    if (!split.empty()) eval.test_frac = test_frac;

    try {
        if (v->parsed()) return run_verify(verify, std::cerr);
        if (r->parsed()) return run_rollout(rollout, std::cerr);
        if (s->parsed()) return run_score(score, std::cerr);
        if (sv->parsed()) {
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            return run_serve(serve, std::cin, std::cout, std::cerr);
        }
        if (e->parsed()) return run_eval(eval, std::cerr);
        if (fg->parsed()) return run_forge_generate(gen, std::cerr);
        if (ff->parsed()) return run_forge_filter(filt, std::cerr);
        if (fe->parsed()) return run_forge_emit(emit, std::cerr);
    } catch (const factguard::Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return err.code() == "USAGE" ? 2 : 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
