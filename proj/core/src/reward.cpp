#include "factguard/reward.hpp"

#include <cmath>

#include <fmt/format.h>

#include "factguard/error.hpp"

namespace factguard {

double reward_acc(std::optional<Label> verdict, Label truth, const RewardConfig& cfg) {
    return verdict && *verdict == truth ? cfg.r_acc_correct : 0.0;
}

double reward_risk(std::optional<Label> verdict, Label truth, double alpha, double gamma) {
    if (!verdict) return 0.0;
    if (*verdict == Label::Fake && truth == Label::Real) return -alpha;
    if (*verdict == Label::Real && truth == Label::Fake) return -gamma;
    return 0.0;
}

double reward_format(const FormatVerdict& fv, const RewardConfig& cfg) {
    return fv.well_formed ? cfg.r_format_valid : 0.0;
}

double reward_tool(bool tool_used, double r_acc, const RewardConfig& cfg) {
    if (!tool_used) return 0.0;
    return r_acc > 0.0 ? cfg.r_tool_plus : -cfg.r_tool_minus;
}

RewardBreakdown total_reward(const Trajectory& t, Label truth, const RewardConfig& cfg) {
    RewardBreakdown b;
    b.tool_used = t.tool_used();
    b.is_fp = t.verdict == Label::Fake && truth == Label::Real;
    b.is_fn = t.verdict == Label::Real && truth == Label::Fake;
    b.r_acc = reward_acc(t.verdict, truth, cfg);
    b.r_format = reward_format(t.format_verdict, cfg);
    b.r_risk = reward_risk(t.verdict, truth, cfg.alpha_fp, cfg.gamma_fn);
    b.r_tool = reward_tool(b.tool_used, b.r_acc, cfg);
    b.total = b.r_acc + b.r_format + cfg.lambda_risk * b.r_risk + b.r_tool;
    return b;
}

AdvantageVector group_advantages(std::span<const double> rewards) {
    const std::size_t n = rewards.size();
    if (n < 2) throw Error("GROUP_TOO_SMALL", fmt::format("need at least 2 rewards, got {}", n));
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);

    AdvantageVector out;
    out.values.assign(n, 0.0);
    if (!(sd >= kDegenerateStd)) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) out.values[i] = (rewards[i] - mean) / sd;
    return out;
}

double kl_surrogate(double logp_ref, double logp_policy) {
    if (!std::isfinite(logp_ref) || !std::isfinite(logp_policy))
        throw Error("NON_FINITE", "log-probabilities must be finite");
    const double d = logp_ref - logp_policy;
    if (d > kMaxLogDifference)
        throw Error("OVERFLOW", fmt::format("log-ratio {} exceeds {}", d, kMaxLogDifference));
    double kl;
    if (std::fabs(d) < 1e-4) {
        // expm1(d) - d loses every digit here; the series is exact to ~1e-20.
        const double d2 = d * d;
        kl = d2 / 2.0 + d2 * d / 6.0 + d2 * d2 / 24.0;
    } else {
        kl = std::expm1(d) - d;
    }
    return kl < 0.0 ? 0.0 : kl;
}

GrpoResult grpo_objective(std::span<const double> advantages, std::span<const TrajectoryLogProbs> logprobs,
                          double beta) {
    if (advantages.size() != logprobs.size())
        throw Error("MISSING_ADVANTAGES",
                    fmt::format("{} advantages for {} trajectories", advantages.size(), logprobs.size()));
    if (advantages.empty()) throw Error("GROUP_TOO_SMALL", "empty group");
    const double g = static_cast<double>(advantages.size());
    GrpoResult out;
    double surrogate = 0.0;
    double kl_sum = 0.0;
    for (std::size_t i = 0; i < advantages.size(); ++i) {
        const auto& lp = logprobs[i];
        const double log_ratio = lp.sum_logp_policy - lp.sum_logp_rollout;
        if (!std::isfinite(log_ratio) || log_ratio > kMaxLogDifference)
            throw Error("RATIO_OVERFLOW", fmt::format("trajectory {}: log-ratio {}", i, log_ratio));
        GrpoTerm term;
        term.ratio = std::exp(log_ratio);
        term.weighted_adv = term.ratio * advantages[i];
        term.kl = kl_surrogate(lp.sum_logp_reference, lp.sum_logp_policy);
        surrogate += term.weighted_adv;
        kl_sum += term.kl;
        out.per_traj.push_back(term);
    }
    out.objective = surrogate / g - beta * (kl_sum / g);
    return out;
}

GrpoResult grpo_objective(const TrajectoryGroup& group, double beta) {
    std::vector<TrajectoryLogProbs> lps;
    lps.reserve(group.trajectories.size());
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& t = group.trajectories[i];
        if (!t.token_logprobs)
            throw Error("MISSING_LOGPROBS", fmt::format("trajectory {} of {} has no log-probabilities", i, group.item_id));
        lps.push_back(*t.token_logprobs);
    }
    if (group.advantages.size() != lps.size())
        throw Error("MISSING_ADVANTAGES", "advantages must be computed before the objective");
    return grpo_objective(group.advantages, lps, beta);
}

ScoredGroup score_group(TrajectoryGroup group, const RewardConfig& cfg) {
    ScoredGroup out;
    group.rewards.clear();
    for (const auto& t : group.trajectories) {
        out.breakdowns.push_back(total_reward(t, group.truth, cfg));
        group.rewards.push_back(out.breakdowns.back().total);
    }
    const AdvantageVector adv = group_advantages(group.rewards);
    group.advantages = adv.values;
    out.degenerate = adv.degenerate;
    bool all_lp = true;
    for (const auto& t : group.trajectories) all_lp = all_lp && t.token_logprobs.has_value();
    if (all_lp) out.grpo = grpo_objective(group, group.beta);
    out.group = std::move(group);
    return out;
}

} // namespace factguard
