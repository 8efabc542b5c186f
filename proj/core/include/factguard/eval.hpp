#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "factguard/backend.hpp"
#include "factguard/prompts.hpp"
#include "factguard/types.hpp"

namespace factguard {

// ---------------------------------------------------------------------------
// Datasets

/// JSONL manifest, one object per line:
///   {"id", "video_path", "duration_s", "transcript", "metadata_text",
///    "label": "fake"|"real", "published_at": RFC 3339, "dataset"}
/// Relative video paths are resolved against the manifest's directory.
/// Errors: IO; SCHEMA (ValidationError whose field() is "line N: <field>");
/// DUPLICATE_ID.
std::vector<NewsItem> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<NewsItem>& items);

struct Split {
    std::vector<NewsItem> train;
    std::vector<NewsItem> test;
};

// Sorted by (published_at, id); the newest ceil(fraction * N) items form
// the test set. Errors: EMPTY_INPUT, BAD_FRACTION.
Split temporal_split(std::vector<NewsItem> items, double test_fraction);

// ---------------------------------------------------------------------------
// Metrics

struct Prediction {
    std::string id;
    std::optional<Label> verdict; // nullopt: no parseable answer
};

struct TruthRow {
    std::string id;
    Label label = Label::Real;
};

std::vector<TruthRow> truth_of(const std::vector<NewsItem>& items);

// Accepts verify output ({"item_id", "verdict"}) or plain {"id", "verdict"}
// rows. Errors: IO, SCHEMA.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

/// Confusion counts with Fake as the positive class. Items without a verdict
/// are counted in n_unparseable, never in tp/fp/fn/tn, so
/// tp + fp + fn + tn + n_unparseable = n. They count as errors for accuracy
/// and, when the truth is Fake, as missed positives in the recall
/// denominator. A zero denominator yields 0.0 with the matching flag set.
struct Metrics {
    int n = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int tn = 0;
    int n_unparseable = 0;
    int n_unparseable_fake = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;

    bool operator==(const Metrics&) const = default;
};

// Error: ID_MISMATCH when the id sets differ or an id repeats.
Metrics compute_metrics(const std::vector<Prediction>& predictions, const std::vector<TruthRow>& truth);

// ---------------------------------------------------------------------------
// Cost-ratio sweeps

struct CostRatio {
    double alpha = 1.0;
    double gamma = 1.0;
    std::string label() const; // "1:2"
    bool operator==(const CostRatio&) const = default;
};

// "1:2,1:1,2:1". Error: BAD_RATIO.
std::vector<CostRatio> parse_cost_ratios(std::string_view text);

struct SweepRow {
    CostRatio ratio;
    Metrics metrics;
};

// Tabulates one prediction set per ratio; no training-time claims.
std::vector<SweepRow> cost_sweep(const std::vector<std::pair<CostRatio, std::vector<Prediction>>>& runs,
                                 const std::vector<TruthRow>& truth);

// Published precision/recall (percent) of the trained agent at three cost
// ratios, kept for context next to locally tabulated sweeps.
struct ReferenceSweepRow {
    const char* dataset;
    const char* ratio;
    double precision;
    double recall;
};
inline constexpr ReferenceSweepRow kReferenceCostSensitivity[] = {
    {"FakeSV", "1:2", 80.8, 82.1}, {"FakeSV", "1:1", 82.2, 80.6}, {"FakeSV", "2:1", 83.2, 75.0},
    {"FakeVV", "1:2", 83.2, 83.7}, {"FakeVV", "1:1", 85.8, 82.1}, {"FakeVV", "2:1", 86.6, 79.3},
};

// ---------------------------------------------------------------------------
// Reasoning audit

struct AuditScore {
    std::string item_id;
    int faithfulness = 0;
    int logical_consistency = 0;
    int evidence_grounding = 0;
    std::string rationale;
    bool operator==(const AuditScore&) const = default;
};

// Strict JSON object with the three integer scores in [1, 5] and a string
// rationale; a single ```json fence around it is tolerated.
std::optional<AuditScore> parse_audit_response(std::string_view text);

// Builds the judge request for a trajectory.
ModelBackendRequest build_audit_prompt(const Trajectory& trajectory, const PromptTemplateSet& templates);

/// Scores the reasoning of a correctly predicted trajectory. One retry on
/// unparseable output. Errors: PRECONDITION (verdict absent or wrong),
/// JUDGE_UNPARSEABLE, BACKEND_UNREACHABLE.
AuditScore audit_reasoning(const Trajectory& trajectory, Label truth, ModelBackend& judge,
                           const PromptTemplateSet& templates);

// ---------------------------------------------------------------------------
// Reports

struct ReportInput {
    std::string run_name = "factguard";
    Metrics metrics;
    std::vector<SweepRow> sweep;
    std::vector<AuditScore> audits;
    std::optional<std::size_t> train_size;
};

// Writes report.json and metrics.csv; cost_sweep.csv and
// cost_sweep_plot.csv when a sweep is present; audits.csv when audits are.
// Output is byte-identical for identical input. Error: IO.
std::vector<std::filesystem::path> emit_report(const ReportInput& input, const std::filesystem::path& out_dir);

} // namespace factguard
