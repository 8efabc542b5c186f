#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factguard/types.hpp"

namespace factguard {

struct RewardBreakdown {
    double r_acc = 0.0;
    double r_format = 0.0;
    double r_risk = 0.0; // before lambda scaling
    double r_tool = 0.0;
    double total = 0.0;
    bool is_fp = false;
    bool is_fn = false;
    bool tool_used = false;

    bool operator==(const RewardBreakdown&) const = default;
};

struct AdvantageVector {
    std::vector<double> values;
    bool degenerate = false;
};

// Fake is the positive class throughout.
double reward_acc(std::optional<Label> verdict, Label truth, const RewardConfig& cfg = {});
double reward_risk(std::optional<Label> verdict, Label truth, double alpha, double gamma);
double reward_format(const FormatVerdict& fv, const RewardConfig& cfg = {});
double reward_tool(bool tool_used, double r_acc, const RewardConfig& cfg = {});

// R = r_acc + r_format + lambda * r_risk + r_tool.
RewardBreakdown total_reward(const Trajectory& t, Label truth, const RewardConfig& cfg = {});

inline constexpr double kDegenerateStd = 1e-12;

// (R_i - mean) / std with the population standard deviation. Groups whose
// std falls below kDegenerateStd get all-zero advantages.
// Throws Error{"GROUP_TOO_SMALL"} for fewer than two rewards.
AdvantageVector group_advantages(std::span<const double> rewards);

// exp(d) - d - 1 with d = logp_ref - logp_policy, evaluated as expm1(d) - d.
// Throws Error{"OVERFLOW"} when d > 700 and Error{"NON_FINITE"} for NaN/inf.
double kl_surrogate(double logp_ref, double logp_policy);

inline constexpr double kMaxLogDifference = 700.0;

struct GrpoTerm {
    double ratio = 0.0;
    double weighted_adv = 0.0;
    double kl = 0.0;
};

struct GrpoResult {
    double objective = 0.0;
    std::vector<GrpoTerm> per_traj;
};

// (1/G) sum ratio_i A_i - beta (1/G) sum kl_i with ratio_i =
// exp(logp_policy - logp_rollout). Diagnostic only.
// Errors: MISSING_LOGPROBS, MISSING_ADVANTAGES, RATIO_OVERFLOW, OVERFLOW.
GrpoResult grpo_objective(const TrajectoryGroup& group, double beta);
GrpoResult grpo_objective(std::span<const double> advantages, std::span<const TrajectoryLogProbs> logprobs,
                          double beta);

struct ScoredGroup {
    TrajectoryGroup group;
    std::vector<RewardBreakdown> breakdowns;
    bool degenerate = false;
    std::optional<GrpoResult> grpo; // present when every trajectory has log-probs
};

// Fills rewards and advantages; evaluates the objective when possible.
ScoredGroup score_group(TrajectoryGroup group, const RewardConfig& cfg);

/// Flat TOML table; unknown keys are rejected.
///
///   lambda_risk = 1.0
///   alpha_fp = 1.0
///   gamma_fn = 1.0
///   r_tool_plus = 0.2
///   r_tool_minus = 0.2
///   r_format_valid = 0.5
///   r_acc_correct = 1.0
///   beta = 0.04
struct RewardSettings {
    RewardConfig rewards;
    double beta = kDefaultKlBeta;
};

// Errors: IO, CONFIG (parse failure, unknown key, wrong type, negative
// coefficient where the sign is fixed).
RewardSettings load_reward_settings(const std::filesystem::path& path);
RewardSettings parse_reward_settings(std::string_view toml_text);
void validate_reward_config(const RewardConfig& cfg);
// Sets the named keys on top of `base` and re-validates. Error: CONFIG.
RewardSettings with_overrides(RewardSettings base, const std::vector<std::pair<std::string, double>>& values);

} // namespace factguard
