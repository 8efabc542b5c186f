#include "commands.hpp"

#include <iostream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/forge.hpp"
#include "factguard/reward.hpp"
#include "factguard/serialization.hpp"

namespace factguard::cli {
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require(bool cond, const std::string& message) {
    if (!cond) throw Error("USAGE", message);
}

RewardSettings settings_from(const fs::path& config) {
    return config.empty() ? RewardSettings{} : load_reward_settings(config);
}

} // namespace

std::shared_ptr<ModelBackend> make_backend(const std::string& kind, const fs::path& mock_script,
                                           const std::string& env_prefix) {
    if (kind == "mock") {
        require(!mock_script.empty(), "the mock backend needs a script (--mock-script)");
        return MockBackend::from_file(mock_script);
    }
    if (kind == "http") {
        auto cfg = HttpBackendConfig::from_env(env_prefix);
        require(!cfg.base_url.empty(), env_prefix + "_URL is not set");
        return std::make_shared<HttpChatBackend>(std::move(cfg));
    }
    throw Error("USAGE", "unknown backend '" + kind + "' (expected mock or http)");
}

ToolRegistry make_registry(const RuntimeOptions& opts) {
    ToolRegistryConfig cfg;
    cfg.budget.clip_scout_max = opts.clip_budget;
    cfg.render.output_dir = opts.artifacts;
    cfg.render.resolution_cap = opts.resolution_cap;
    if (!opts.blocklist.empty()) cfg.fact_probe.blocklist = load_blocklist(opts.blocklist);
    if (opts.search == "stub") {
        cfg.search = std::make_shared<StubSearchProvider>(opts.search_fixtures);
    } else if (opts.search == "http") {
        auto sc = HttpSearchConfig::from_env();
        require(!sc.base_url.empty(), "FACTGUARD_SEARCH_URL is not set");
        cfg.search = std::make_shared<HttpSearchProvider>(std::move(sc));
    } else {
        throw Error("USAGE", "unknown search provider '" + opts.search + "' (expected stub or http)");
    }
    const bool frozen = opts.frozen_clock.value_or(opts.backend == "mock");
    cfg.clock = frozen ? frozen_clock() : steady_clock_ms();
    return ToolRegistry(std::move(cfg));
}

PromptTemplateSet load_template_set(const RuntimeOptions& opts, bool teacher) {
    if (opts.templates.empty()) return teacher ? teacher_templates() : default_templates();
    return load_templates(opts.templates, teacher);
}

int run_verify(const VerifyOptions& opts, std::ostream& log) {
    const auto items = load_manifest(opts.manifest);
    auto backend = make_backend(opts.runtime.backend, opts.runtime.mock_script);
    const ToolRegistry tools = make_registry(opts.runtime);
    const PromptTemplateSet templates = load_template_set(opts.runtime, false);

    EpisodeConfig ep;
    ep.temperature = opts.temperature;
    ep.seed = opts.seed;
    const auto trajectories = run_batch(
        items.size(), [&](std::size_t i) { return run_episode(items[i], *backend, tools, templates, ep); },
        opts.runtime.concurrency);

    std::vector<json> rows;
    int answered = 0;
    int tool_used = 0;
    for (const auto& t : trajectories) {
        rows.push_back(to_json(t));
        answered += t.verdict.has_value();
        tool_used += t.tool_used();
    }
    write_jsonl(opts.out, rows);
    fmt::print(log, "verified {} items: {} with a verdict, {} used a tool -> {}\n", items.size(), answered,
               tool_used, opts.out.string());
    return 0;
}

int run_rollout(const RolloutOptions& opts, std::ostream& log) {
    const auto items = load_manifest(opts.manifest);
    auto backend = make_backend(opts.runtime.backend, opts.runtime.mock_script);
    const ToolRegistry tools = make_registry(opts.runtime);
    const PromptTemplateSet templates = load_template_set(opts.runtime, false);
    const RewardSettings settings = settings_from(opts.config);

    RolloutConfig rc;
    rc.group_size = opts.group_size;
    rc.temperature = opts.temperature;
    rc.base_seed = opts.seed;
    rc.beta = settings.beta;
    if (!opts.reference_backend.empty())
        rc.reference = make_backend(opts.reference_backend, opts.reference_script, "FACTGUARD_REFERENCE");

    // Items run in parallel; episodes inside a group run sequentially.
    const auto groups = run_batch(
        items.size(), [&](std::size_t i) { return rollout_group(items[i], *backend, tools, templates, rc); },
        opts.runtime.concurrency);
    std::vector<json> rows;
    for (const auto& g : groups) rows.push_back(to_json(g));
    write_jsonl(opts.out, rows);
    fmt::print(log, "rolled out {} groups of {} -> {}\n", groups.size(), opts.group_size, opts.out.string());
    return 0;
}

int run_score(const ScoreOptions& opts, std::ostream& log) {
    const RewardSettings settings = settings_from(opts.config);
    std::vector<json> rows;
    double reward_sum = 0.0;
    std::size_t n_traj = 0;
    for (const auto& j : read_jsonl(opts.groups)) {
        TrajectoryGroup g = group_from_json(j);
        g.beta = settings.beta;
        const ScoredGroup scored = score_group(std::move(g), settings.rewards);
        for (double r : scored.group.rewards) reward_sum += r;
        n_traj += scored.group.rewards.size();
        rows.push_back(to_json(scored));
    }
    write_jsonl(opts.out, rows);
    fmt::print(log, "scored {} groups ({} trajectories, mean reward {:.4f}) -> {}\n", rows.size(), n_traj,
               n_traj ? reward_sum / static_cast<double>(n_traj) : 0.0, opts.out.string());
    return 0;
}

std::atomic<bool>& serve_stop_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

int run_serve(const ServeOptions& opts, std::istream& in, std::ostream& out, std::ostream& log) {
    const int modes = int(opts.stdio) + int(!opts.socket.empty()) + int(opts.port.has_value());
    require(modes == 1, "choose exactly one of --stdio, --socket PATH or --port N");
    const BridgeHandler handler(settings_from(opts.config));
    if (opts.stdio) {
        serve_stream(in, out, handler);
        return 0;
    }
    BridgeEndpoint ep;
    ep.unix_path = opts.socket;
    ep.tcp_port = opts.port.value_or(0);
    serve_socket(ep, handler, serve_stop_flag(), [&](const std::string& addr) {
        fmt::print(log, "listening on {}\n", addr);
        log.flush();
    });
    return 0;
}

int run_eval(const EvalOptions& opts, std::ostream& log) {
    auto items = load_manifest(opts.manifest);
    ReportInput report;
    report.run_name = opts.name;
    if (opts.test_frac) {
        Split split = temporal_split(std::move(items), *opts.test_frac);
        report.train_size = split.train.size();
        items = std::move(split.test);
    }
    const auto truth = truth_of(items);
    std::set<std::string> ids;
    for (const auto& t : truth) ids.insert(t.id);
    auto restrict = [&](std::vector<Prediction> preds) {
        std::erase_if(preds, [&](const Prediction& p) { return !ids.count(p.id); });
        return preds;
    };

    report.metrics = compute_metrics(restrict(load_predictions(opts.predictions)), truth);

    if (!opts.sweep.empty()) {
        const auto ratios = parse_cost_ratios(opts.sweep);
        require(ratios.size() == opts.sweep_predictions.size(),
                fmt::format("--sweep lists {} ratios but {} prediction files were given", ratios.size(),
                            opts.sweep_predictions.size()));
        std::vector<std::pair<CostRatio, std::vector<Prediction>>> runs;
        for (std::size_t i = 0; i < ratios.size(); ++i)
            runs.emplace_back(ratios[i], restrict(load_predictions(opts.sweep_predictions[i])));
        report.sweep = cost_sweep(runs, truth);
    }

    if (opts.audit) {
        auto judge = make_backend(opts.judge_backend, opts.judge_script, "FACTGUARD_JUDGE");
        const PromptTemplateSet templates = opts.templates.empty() ? default_templates() : load_templates(opts.templates);
        std::map<std::string, Label> labels;
        for (const auto& t : truth) labels.emplace(t.id, t.label);
        std::vector<Trajectory> correct;
        for (const auto& j : read_jsonl(opts.predictions)) {
            Trajectory t = trajectory_from_json(j);
            const auto it = labels.find(t.item_id);
            if (it != labels.end() && t.verdict == it->second) correct.push_back(std::move(t));
        }
        report.audits = run_batch(
            correct.size(),
            [&](std::size_t i) { return audit_reasoning(correct[i], labels.at(correct[i].item_id), *judge, templates); },
            opts.concurrency);
    }

    const auto files = emit_report(report, opts.out);
    const Metrics& m = report.metrics;
    fmt::print(log, "n={} tp={} fp={} fn={} tn={} unparseable={} acc={:.4f} prec={:.4f} rec={:.4f} f1={:.4f}\n", m.n,
               m.tp, m.fp, m.fn, m.tn, m.n_unparseable, m.accuracy, m.precision, m.recall, m.f1);
    for (const auto& f : files) fmt::print(log, "wrote {}\n", f.string());
    return 0;
}

int run_forge_generate(const ForgeGenerateOptions& opts, std::ostream& log) {
    const auto items = load_manifest(opts.manifest);
    auto teacher = make_backend(opts.runtime.backend, opts.runtime.mock_script, "FACTGUARD_TEACHER");
    const ToolRegistry tools = make_registry(opts.runtime);
    const PromptTemplateSet templates = load_template_set(opts.runtime, true);
    ForgeConfig fc;
    fc.episode.seed = opts.seed;
    fc.concurrency = opts.runtime.concurrency;
    const auto records = generate_teacher_trajectories(items, *teacher, tools, templates, fc);
    std::vector<json> rows;
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(opts.out, rows);
    fmt::print(log, "generated {} teacher trajectories -> {}\n", records.size(), opts.out.string());
    return 0;
}

int run_forge_filter(const ForgeFilterOptions& opts, std::ostream& log) {
    std::vector<ForgeRecord> records;
    for (const auto& j : read_jsonl(opts.in)) records.push_back(forge_record_from_json(j));
    const auto review = opts.review.empty() ? std::map<std::string, bool>{} : load_review(opts.review);
    const std::size_t total = records.size();
    const FilterResult result = filter_rules(std::move(records), review);

    std::map<std::string, int> by_code;
    std::vector<json> kept;
    std::vector<json> rejected;
    for (const auto& r : result.kept) kept.push_back(to_json(r));
    for (const auto& r : result.rejected) {
        rejected.push_back(to_json(r));
        for (auto c : r.rejection_codes) ++by_code[std::string(to_string(c))];
    }
    write_jsonl(opts.kept, kept);
    write_jsonl(opts.rejected, rejected);
    fmt::print(log, "{} records: {} kept, {} rejected\n", total, kept.size(), rejected.size());
    for (const auto& [code, n] : by_code) fmt::print(log, "  {}: {}\n", code, n);
    return 0;
}

int run_forge_emit(const ForgeEmitOptions& opts, std::ostream& log) {
    std::vector<ForgeRecord> records;
    for (const auto& j : read_jsonl(opts.in)) records.push_back(forge_record_from_json(j));
    const PromptTemplateSet student = opts.templates.empty() ? default_templates() : load_templates(opts.templates);
    const SftStats stats = emit_sft_dataset(records, opts.out, student);
    fs::path stats_path = opts.out;
    stats_path += ".stats.json";
    write_text_file(stats_path, to_json(stats).dump(2) + "\n");
    fmt::print(log, "emitted {} conversations -> {} (stats: {})\n", stats.total, opts.out.string(),
               stats_path.string());
    return 0;
}

} // namespace factguard::cli
