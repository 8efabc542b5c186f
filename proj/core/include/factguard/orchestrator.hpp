#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "factguard/backend.hpp"
#include "factguard/prompts.hpp"
#include "factguard/tools.hpp"
#include "factguard/types.hpp"

namespace factguard {

inline constexpr std::string_view kTruncationMarker = " [...truncated]";

struct PromptLimits {
    int max_prompt_tokens = kMaxPromptTokens;
    int max_response_tokens = kMaxResponseTokens;
};

// Stage-1 request: system skeleton plus the item rendered into the user
// template, with the video attached. When the estimate exceeds the limit
// the transcript is cut first, then the metadata; template text is never
// cut. Throws Error{"PROMPT_TOO_LONG"} when the skeleton alone does not fit.
ModelBackendRequest build_stage1_prompt(const NewsItem& item, const PromptTemplateSet& templates,
                                        const PromptLimits& limits = {});

// Stage-1 history, the assistant's first turn, then the observation block as
// a tool message. The same truncation policy is applied to the stage-1
// fields so the whole request stays within the limit.
ModelBackendRequest build_stage2_prompt(const NewsItem& item, std::string_view stage1_turn,
                                        const Observation& observation, const PromptTemplateSet& templates,
                                        const PromptLimits& limits = {});

using TransitionObserver = std::function<void(const std::string& item_id, Stage from, Stage to)>;

struct EpisodeConfig {
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    bool want_logprobs = false;
    PromptLimits limits;
    // Scores the generated turns for sum_logp_reference when set.
    std::shared_ptr<ModelBackend> reference;
    TransitionObserver on_transition;
};

/// One two-stage episode. Stage 1 either answers, which ends the episode, or
/// emits a tool call that is dispatched before a single refinement turn.
/// Malformed output never throws: the trajectory records the format verdict
/// and carries no verdict. Backend failures propagate (BACKEND_UNREACHABLE).
Trajectory run_episode(const NewsItem& item, ModelBackend& backend, const ToolRegistry& tools,
                       const PromptTemplateSet& templates, const EpisodeConfig& config = {});

struct RolloutConfig {
    int group_size = kDefaultGroupSize;
    double temperature = 1.0;
    std::uint64_t base_seed = 0;
    double beta = kDefaultKlBeta;
    bool want_logprobs = true;
    PromptLimits limits;
    std::shared_ptr<ModelBackend> reference;
    int concurrency = 1;
};

// G independent episodes with seeds base_seed + i. Rewards and advantages
// are left empty. Throws Error{"GROUP_TOO_SMALL"} for G < 2.
TrajectoryGroup rollout_group(const NewsItem& item, ModelBackend& backend, const ToolRegistry& tools,
                              const PromptTemplateSet& templates, const RolloutConfig& config = {});

inline constexpr int kDefaultConcurrency = 8;

// Applies `fn` to every index in [0, n) on up to `concurrency` threads and
// returns the results in index order. If any call throws, the remaining work
// is abandoned and the first exception is rethrown.
template <typename Fn>
auto run_batch(std::size_t n, Fn&& fn, int concurrency = kDefaultConcurrency)
    -> std::vector<decltype(fn(std::size_t{}))>;

} // namespace factguard

#include "factguard/detail/run_batch.ipp"
