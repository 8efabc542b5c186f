#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "factguard/timestamp.hpp"

namespace factguard {

enum class Label { Fake, Real };
enum class SourceDataset { FakeSV, FakeTT, FakeVV, Synthetic };
enum class ToolId { FactProbe, ClipScout };

std::string_view to_string(Label label);
std::string_view to_string(SourceDataset dataset);
std::string_view to_string(ToolId tool);

// Case-insensitive, surrounding whitespace ignored.
std::optional<Label> label_from_string(std::string_view text);
std::optional<SourceDataset> dataset_from_string(std::string_view text);
std::optional<ToolId> tool_from_string(std::string_view text);

/// One multimodal sample: video, speech transcript and text metadata, plus
/// the ground-truth label and publish time used for temporal splitting.
struct NewsItem {
    std::string id;
    std::filesystem::path video_path;
    double video_duration_s = 0.0;
    std::string audio_transcript;
    std::string metadata_text;
    Label label = Label::Real;
    Timestamp published_at{};
    SourceDataset source_dataset = SourceDataset::Synthetic;

    bool operator==(const NewsItem&) const = default;
};

// ---------------------------------------------------------------------------
// Tool invocation

struct FactProbeParams {
    std::string query;
    bool operator==(const FactProbeParams&) const = default;
};

struct ClipScoutParams {
    double start_s = 0.0;
    double end_s = 0.0;
    bool operator==(const ClipScoutParams&) const = default;
};

struct ToolAction {
    std::variant<FactProbeParams, ClipScoutParams> params;

    ToolId tool_id() const noexcept;
    bool operator==(const ToolAction&) const = default;
};

struct FrameGrid {
    double interval_start_s = 0.0;
    double interval_end_s = 0.0;
    std::vector<double> sample_timestamps;
    std::filesystem::path image;
    int width = 0;
    int height = 0;

    bool operator==(const FrameGrid&) const = default;
};

struct Observation {
    ToolId tool_id = ToolId::FactProbe;
    bool ok = false;
    std::optional<std::string> text_report;
    std::optional<FrameGrid> frame_grid;
    std::optional<std::string> error_note;
    std::int64_t latency_ms = 0;

    bool operator==(const Observation&) const = default;
};

// ---------------------------------------------------------------------------
// Agent state

enum class Stage { Initial, AwaitingTool, Refining, Done };
std::string_view to_string(Stage stage);

/// Per-episode state. Budgets are keyed by tool; a missing key means the
/// tool is unlimited. Only the legal stage transitions are accepted:
/// Initial->{AwaitingTool, Done}, AwaitingTool->Refining, Refining->Done.
class AgentState {
public:
    AgentState() = default;
    explicit AgentState(std::map<ToolId, int> budgets);

    Stage stage() const noexcept { return stage_; }
    int turn_index() const noexcept { return turn_index_; }
    const std::map<ToolId, int>& tool_budget_remaining() const noexcept { return budgets_; }
    const std::vector<Observation>& accumulated_observations() const noexcept { return observations_; }

    static bool is_legal_transition(Stage from, Stage to) noexcept;

    // Throws Error{"ILLEGAL_TRANSITION"}.
    void transition(Stage next);
    void advance_turn() noexcept { ++turn_index_; }

    // nullopt when unlimited.
    std::optional<int> remaining(ToolId tool) const;
    // Decrements the budget when one remains. Returns false (and leaves the
    // budget at zero) when exhausted.
    bool try_consume(ToolId tool);

    void record(Observation obs) { observations_.push_back(std::move(obs)); }

private:
    Stage stage_ = Stage::Initial;
    int turn_index_ = 0;
    std::map<ToolId, int> budgets_;
    std::vector<Observation> observations_;
};

// ---------------------------------------------------------------------------
// Parsed model output

enum class Tag { Think, ToolCall, Answer };
std::string_view to_string(Tag tag);

struct TagSpan {
    Tag tag = Tag::Think;
    std::size_t byte_start = 0; // offset of the opening tag
    std::size_t byte_end = 0;   // one past the closing tag
    bool operator==(const TagSpan&) const = default;
};

struct StrayTag {
    Tag tag = Tag::Think;
    bool closing = false;
    std::size_t byte_offset = 0;
    bool operator==(const StrayTag&) const = default;
};

struct ParsedTurn {
    std::optional<std::string> think_text;
    std::optional<std::string> tool_call_raw;
    std::optional<std::string> answer_raw;
    // First complete element of each tag, in byte order. Text in the gaps
    // between spans is outside any tag.
    std::vector<TagSpan> span_map;
    // Opening or closing tags that could not be paired.
    std::vector<StrayTag> stray_tags;
    // Tags whose element appeared more than once (first occurrence kept).
    std::vector<Tag> duplicate_tags;
    // Some element body contains another tag token.
    bool nested_tags = false;
    // Non-whitespace bytes outside every element and stray tag.
    bool outside_text = false;

    bool operator==(const ParsedTurn&) const = default;
};

enum class FormatViolation {
    MissingThink,
    MissingAnswerAndTool,
    UnclosedTag,
    DuplicateTag,
    TagOrder,
    BadToolJson,
    BadAnswerToken,
    TrailingGarbage,
};
std::string_view to_string(FormatViolation v);
std::optional<FormatViolation> format_violation_from_string(std::string_view text);

struct FormatVerdict {
    bool well_formed = false;
    bool answer_parseable = false;
    std::vector<FormatViolation> violations;

    bool has(FormatViolation v) const;
    bool operator==(const FormatVerdict&) const = default;
};

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryLogProbs {
    double sum_logp_policy = 0.0;
    double sum_logp_rollout = 0.0;
    double sum_logp_reference = 0.0;
    int token_count = 0;
    bool operator==(const TrajectoryLogProbs&) const = default;
};

struct Turn {
    std::string role = "assistant";
    std::string raw_text;
    ParsedTurn parsed;
    bool operator==(const Turn&) const = default;
};

// A tool call emitted in the refinement turn, after the single tool round
// was spent. It is never executed; the observation records the refusal.
struct FollowupAttempt {
    std::string tool_call_raw;
    std::optional<ToolAction> action;
    Observation observation;
    bool operator==(const FollowupAttempt&) const = default;
};

struct Trajectory {
    std::string item_id;
    std::optional<std::uint64_t> seed;
    std::vector<Turn> turns;
    std::optional<ToolAction> action;
    std::optional<Observation> observation;
    std::optional<FollowupAttempt> followup;
    std::optional<Label> verdict;
    std::optional<TrajectoryLogProbs> token_logprobs;
    FormatVerdict format_verdict;

    bool tool_used() const noexcept { return action.has_value() && observation.has_value(); }
    bool operator==(const Trajectory&) const = default;
};

// ---------------------------------------------------------------------------
// Reward configuration and groups

struct RewardConfig {
    double lambda_risk = 1.0;
    double alpha_fp = 1.0;
    double gamma_fn = 1.0;
    double r_tool_plus = 0.2;
    double r_tool_minus = 0.2;
    double r_format_valid = 0.5;
    double r_acc_correct = 1.0;

    bool operator==(const RewardConfig&) const = default;
};

inline constexpr int kDefaultGroupSize = 8;
inline constexpr double kDefaultKlBeta = 0.04;

struct TrajectoryGroup {
    std::string item_id;
    Label truth = Label::Real;
    std::vector<Trajectory> trajectories;
    std::vector<double> rewards;
    std::vector<double> advantages;
    double beta = kDefaultKlBeta;

    std::size_t size() const noexcept { return trajectories.size(); }
    bool operator==(const TrajectoryGroup&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

// Accepts a manifest-style record (see eval::load_manifest for the schema).
// Throws ValidationError with codes MISSING_FIELD, BAD_TYPE, BAD_TIMESTAMP,
// BAD_LABEL, BAD_DATASET, BAD_DURATION.
NewsItem validate_news_item(const nlohmann::json& raw);

// Violation codes: TURN_COUNT, OBS_MISSING, OBS_UNEXPECTED, OBS_TOOL_MISMATCH,
// OBS_PAYLOAD, ACTION_TURN_MISMATCH, VERDICT_MISMATCH.
std::vector<std::string> assert_trajectory_wellformed(const Trajectory& t);

} // namespace factguard
