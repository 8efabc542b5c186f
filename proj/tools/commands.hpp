#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "factguard/backend.hpp"
#include "factguard/bridge.hpp"
#include "factguard/eval.hpp"
#include "factguard/orchestrator.hpp"
#include "factguard/prompts.hpp"
#include "factguard/tools.hpp"

namespace factguard::cli {

// Settings shared by every command that runs episodes.
struct RuntimeOptions {
    std::string backend = "mock";           // mock | http
    std::filesystem::path mock_script;      // required for mock
    std::string search = "stub";            // stub | http
    std::filesystem::path search_fixtures;  // stub provider directory
    std::filesystem::path blocklist;        // host-suffix file; defaults when empty
    std::filesystem::path artifacts = "artifacts";
    std::filesystem::path templates;        // directory overriding the built-in templates
    int concurrency = kDefaultConcurrency;
    int clip_budget = 1;
    int resolution_cap = 1024;
    // Latency stamps read from a frozen clock so reruns are byte-identical.
    // On by default with the mock backend.
    std::optional<bool> frozen_clock;
};

std::shared_ptr<ModelBackend> make_backend(const std::string& kind, const std::filesystem::path& mock_script,
                                           const std::string& env_prefix = "FACTGUARD_BACKEND");
ToolRegistry make_registry(const RuntimeOptions& opts);
PromptTemplateSet load_template_set(const RuntimeOptions& opts, bool teacher);

struct VerifyOptions {
    std::filesystem::path manifest;
    std::filesystem::path out;
    RuntimeOptions runtime;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
};
int run_verify(const VerifyOptions& opts, std::ostream& log);

struct RolloutOptions {
    std::filesystem::path manifest;
    std::filesystem::path out;
    RuntimeOptions runtime;
    int group_size = kDefaultGroupSize;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::filesystem::path config; // rewards TOML, for beta
    std::string reference_backend; // mock | http, optional
    std::filesystem::path reference_script;
};
int run_rollout(const RolloutOptions& opts, std::ostream& log);

struct ScoreOptions {
    std::filesystem::path groups;
    std::filesystem::path config;
    std::filesystem::path out;
};
int run_score(const ScoreOptions& opts, std::ostream& log);

struct ServeOptions {
    bool stdio = false;
    std::filesystem::path socket;
    std::optional<std::uint16_t> port;
    std::filesystem::path config;
};
// Socket modes run until serve_stop_flag() becomes true.
std::atomic<bool>& serve_stop_flag();
int run_serve(const ServeOptions& opts, std::istream& in, std::ostream& out, std::ostream& log);

struct EvalOptions {
    std::filesystem::path manifest;
    std::filesystem::path predictions;
    std::filesystem::path out;
    std::string name = "factguard";
    std::optional<double> test_frac; // temporal split when set
    std::string sweep;               // "1:2,1:1,2:1"
    std::vector<std::filesystem::path> sweep_predictions;
    bool audit = false;
    std::string judge_backend = "mock";
    std::filesystem::path judge_script;
    std::filesystem::path templates;
    int concurrency = kDefaultConcurrency;
};
int run_eval(const EvalOptions& opts, std::ostream& log);

struct ForgeGenerateOptions {
    std::filesystem::path manifest;
    std::filesystem::path out;
    RuntimeOptions runtime;
    std::optional<std::uint64_t> seed;
};
int run_forge_generate(const ForgeGenerateOptions& opts, std::ostream& log);

struct ForgeFilterOptions {
    std::filesystem::path in;
    std::filesystem::path review;
    std::filesystem::path kept;
    std::filesystem::path rejected;
};
int run_forge_filter(const ForgeFilterOptions& opts, std::ostream& log);

struct ForgeEmitOptions {
    std::filesystem::path in;
    std::filesystem::path out;
    std::filesystem::path templates;
};
int run_forge_emit(const ForgeEmitOptions& opts, std::ostream& log);

} // namespace factguard::cli
