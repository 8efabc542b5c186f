#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "factguard/image.hpp"
#include "factguard/types.hpp"

namespace factguard {

// ---------------------------------------------------------------------------
// Web search providers

struct SearchHit {
    std::string title;
    std::string snippet;
    std::string link;
    int position = 0;
};

/// Source of organic web-search results. Implementations must be safe to
/// call from several episodes at once. Failures throw Error with code
/// PROVIDER_TIMEOUT or PROVIDER_ERROR.
class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    virtual std::vector<SearchHit> search(const std::string& query, int num_results) = 0;
};

struct HttpSearchConfig {
    std::string base_url; // POST target, e.g. https://google.serper.dev/search
    std::string api_key;
    std::chrono::milliseconds deadline{10000};
    int retries = 2;
    std::chrono::milliseconds backoff{250}; // doubled after every failed attempt

    // FACTGUARD_SEARCH_URL, FACTGUARD_SEARCH_API_KEY.
    static HttpSearchConfig from_env();
};

// Serper-style JSON API: request {"q", "num"}, API key in X-API-KEY, response
// with an "organic" array of {title, snippet, link, position}.
class HttpSearchProvider final : public SearchProvider {
public:
    explicit HttpSearchProvider(HttpSearchConfig config);
    std::vector<SearchHit> search(const std::string& query, int num_results) override;

private:
    HttpSearchConfig config_;
};

// Reads canned provider responses from `<dir>/<query-slug>.json`, falling
// back to `<dir>/default.json` and then to an empty organic list. A fixture
// of the form {"error": "timeout"} or {"error": "status", ...} simulates
// provider failures.
class StubSearchProvider final : public SearchProvider {
public:
    explicit StubSearchProvider(std::filesystem::path dir);
    std::vector<SearchHit> search(const std::string& query, int num_results) override;

    static std::string slug(const std::string& query);

private:
    std::filesystem::path dir_;
};

// Parses a provider response body; keeps the "organic" array only.
std::vector<SearchHit> parse_search_response(const std::string& body);

// ---------------------------------------------------------------------------
// FactProbe

inline constexpr std::string_view kNoEvidenceFound = "NO_EVIDENCE_FOUND";

struct EvidenceEntry {
    std::string title;
    std::string snippet;
    std::string url;
    int rank = 0;
    bool operator==(const EvidenceEntry&) const = default;
};

struct EvidenceReport {
    std::string query;
    std::vector<EvidenceEntry> entries;
    std::string synthesized_text;
    int sources_dropped = 0;
    bool operator==(const EvidenceReport&) const = default;
};

std::vector<std::string> default_blocklist();
// One host suffix per line; blank lines and '#' comments ignored.
std::vector<std::string> load_blocklist(const std::filesystem::path& path);

std::string url_host(std::string_view url);
// True when host equals a suffix or ends with "." + suffix.
bool host_blocked(std::string_view host, const std::vector<std::string>& blocklist);

struct FactProbeConfig {
    int top_k = 5;
    int max_report_chars = 2000;
    int request_results = 10;
    std::vector<std::string> blocklist = default_blocklist();
};

EvidenceReport fact_probe(const std::string& query, SearchProvider& provider, const FactProbeConfig& config);

// ---------------------------------------------------------------------------
// ClipScout

struct RenderConfig {
    int resolution_cap = 1024;
    std::filesystem::path output_dir = "artifacts";
    // External decoder argv; "{path}", "{t}" and "{out}" are substituted.
    // Used for any video that is not a frame-directory fixture.
    std::vector<std::string> decoder_command = {"ffmpeg", "-loglevel", "error", "-ss", "{t}", "-i",
                                                "{path}", "-frames:v", "1", "-y", "{out}"};
};

inline constexpr int kClipFrames = 4;

// Midpoint sampling over the interval clamped to [0, duration]:
// t_i = s + (i + 0.5) * (e - s) / 4. Throws Error{"DEGENERATE_INTERVAL"}.
std::vector<double> clip_sample_timestamps(double start_s, double end_s, double duration_s);

// Throws Error with DEGENERATE_INTERVAL, DECODE_FAILURE or EMPTY_RESULTS.
FrameGrid clip_scout(double start_s, double end_s, const NewsItem& item, const RenderConfig& config);

// A frame-directory "video": frames.json ({"fps": n, "duration_s": n,
// "extension": "ppm"}) plus frames named 000000.<ext>, 000001.<ext>, ...
bool is_frame_fixture(const std::filesystem::path& video_path);
void write_frame_fixture(const std::filesystem::path& dir, const std::vector<Image>& frames, double fps);

// ---------------------------------------------------------------------------
// Registry and dispatch

struct ToolBudget {
    int clip_scout_max = 1;
    std::optional<int> fact_probe_max; // nullopt: unlimited

    std::map<ToolId, int> as_map() const;
};

using Clock = std::function<std::int64_t()>; // milliseconds

Clock steady_clock_ms();
Clock frozen_clock();

struct ToolRegistryConfig {
    ToolBudget budget;
    FactProbeConfig fact_probe;
    RenderConfig render;
    std::shared_ptr<SearchProvider> search;
    Clock clock = steady_clock_ms();
};

class ToolRegistry {
public:
    explicit ToolRegistry(ToolRegistryConfig config);

    AgentState new_episode_state() const;

    /// Runs the tool named by `action` and records the observation in
    /// `state`. The budget is charged on every attempt, successful or not.
    /// Never throws for tool failures; they come back as ok=false with
    /// error_note set to BUDGET_EXHAUSTED, PROVIDER_TIMEOUT, PROVIDER_ERROR,
    /// DECODE_FAILURE, DEGENERATE_INTERVAL or EMPTY_RESULTS.
    Observation dispatch(const ToolAction& action, const NewsItem& item, AgentState& state) const;

    const ToolRegistryConfig& config() const noexcept { return config_; }

private:
    ToolRegistryConfig config_;
};

struct PromptBlock {
    std::string text;
    std::optional<std::filesystem::path> image;
    bool operator==(const PromptBlock&) const = default;
};

PromptBlock observation_to_prompt_block(const Observation& obs);

// "11.25s, 13.75s, ..." using the shortest round-trip decimal form.
std::string format_timestamps(const std::vector<double>& timestamps);

} // namespace factguard
