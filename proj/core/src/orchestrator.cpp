#include "factguard/orchestrator.hpp"

#include <fmt/format.h>

#include "factguard/error.hpp"
#include "factguard/turn_parser.hpp"
#include "text_util.hpp"

namespace factguard {

namespace {

std::string cut(std::string_view text, std::size_t room) {
    if (text.size() <= room) return std::string(text);
    if (room < kTruncationMarker.size()) return {};
    std::string out(text.substr(0, detail::utf8_prefix(text, room - kTruncationMarker.size())));
    out.append(kTruncationMarker);
    return out;
}

std::size_t total_chars(const std::vector<ChatMessage>& messages) {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.text.size();
    return n;
}

std::vector<ChatMessage> stage1_messages(const NewsItem& item, const std::string& metadata,
                                         const std::string& transcript, const PromptTemplateSet& templates) {
    std::map<std::string, std::string> values{
        {"duration_s", fmt::format("{}", item.video_duration_s)},
        {"metadata_text", metadata},
        {"transcript", transcript},
    };
    if (templates.reveals_label) values["label"] = std::string(to_string(item.label));
    ChatMessage system{Role::System, templates.stage1_system, {}};
    ChatMessage user{Role::User, render_template(templates.stage1_user, values), {}};
    user.attachments.push_back({Attachment::Kind::Video, item.video_path});
    return {std::move(system), std::move(user)};
}

// Builds messages through `make`, shrinking transcript then metadata until
// the character/4 estimate fits.
template <typename Make>
std::vector<ChatMessage> fit(const NewsItem& item, const PromptLimits& limits, Make make) {
    auto messages = make(item.metadata_text, item.audio_transcript);
    const std::size_t limit_chars = static_cast<std::size_t>(std::max(0, limits.max_prompt_tokens)) * 4;
    if (total_chars(messages) <= limit_chars) return messages;

    const std::size_t skeleton = total_chars(make(std::string{}, std::string{}));
    if (skeleton > limit_chars)
        throw Error("PROMPT_TOO_LONG", fmt::format("prompt skeleton needs {} tokens, limit is {}",
                                                   (skeleton + 3) / 4, limits.max_prompt_tokens));
    const std::size_t avail = limit_chars - skeleton;
    std::string metadata = item.metadata_text;
    std::string transcript;
    if (metadata.size() <= avail) {
        transcript = cut(item.audio_transcript, avail - metadata.size());
    } else {
        metadata = cut(item.metadata_text, avail);
    }
    return make(metadata, transcript);
}

ModelBackendRequest request_for(std::vector<ChatMessage> messages, const PromptLimits& limits) {
    ModelBackendRequest req;
    req.messages = std::move(messages);
    req.max_tokens = std::min(limits.max_response_tokens, kMaxResponseTokens);
    return req;
}

} // namespace

ModelBackendRequest build_stage1_prompt(const NewsItem& item, const PromptTemplateSet& templates,
                                        const PromptLimits& limits) {
    auto messages = fit(item, limits, [&](const std::string& meta, const std::string& tr) {
        return stage1_messages(item, meta, tr, templates);
    });
    return request_for(std::move(messages), limits);
}

ModelBackendRequest build_stage2_prompt(const NewsItem& item, std::string_view stage1_turn,
                                        const Observation& observation, const PromptTemplateSet& templates,
                                        const PromptLimits& limits) {
    const PromptBlock block = observation_to_prompt_block(observation);
    ChatMessage tool{Role::Tool, render_template(templates.stage2_user, {{"observation", block.text}}), {}};
    if (block.image) tool.attachments.push_back({Attachment::Kind::Image, *block.image});
    ChatMessage assistant{Role::Assistant, std::string(stage1_turn), {}};

    auto messages = fit(item, limits, [&](const std::string& meta, const std::string& tr) {
        auto m = stage1_messages(item, meta, tr, templates);
        m.push_back(assistant);
        m.push_back(tool);
        return m;
    });
    return request_for(std::move(messages), limits);
}

Trajectory run_episode(const NewsItem& item, ModelBackend& backend, const ToolRegistry& tools,
                       const PromptTemplateSet& templates, const EpisodeConfig& config) {
    AgentState state = tools.new_episode_state();
    auto move_to = [&](Stage next) {
        const Stage from = state.stage();
        state.transition(next);
        if (config.on_transition) config.on_transition(item.id, from, next);
    };

    Trajectory traj;
    traj.item_id = item.id;
    traj.seed = config.seed;

    double sum_logp = 0.0;
    double sum_ref = 0.0;
    bool have_logp = config.want_logprobs;
    bool have_ref = config.reference != nullptr;
    int tokens = 0;

    auto call = [&](ModelBackendRequest req) {
        req.temperature = config.temperature;
        req.seed = config.seed;
        req.want_logprobs = config.want_logprobs;
        ModelBackendResponse resp = backend.complete(req);
        tokens += resp.token_count;
        if (resp.sum_logprob) sum_logp += *resp.sum_logprob;
        else have_logp = false;
        if (have_ref) {
            auto ref = config.reference->score(req, resp.text);
            if (ref) sum_ref += *ref;
            else have_ref = false;
        }
        Turn turn;
        turn.raw_text = std::move(resp.text);
        turn.parsed = parse_turn(turn.raw_text);
        traj.turns.push_back(std::move(turn));
        state.advance_turn();
    };

    auto finish = [&](StageExpectation last) {
        std::vector<ParsedTurn> parsed;
        for (const auto& t : traj.turns) parsed.push_back(t.parsed);
        traj.format_verdict = validate_format(parsed, last);
        if (traj.format_verdict.answer_parseable) {
            traj.verdict = *parse_answer_label(*traj.turns.back().parsed.answer_raw);
        }
        if (have_logp && tokens > 0) {
            traj.token_logprobs = TrajectoryLogProbs{sum_logp, sum_logp, have_ref ? sum_ref : sum_logp, tokens};
        }
        move_to(Stage::Done);
        return traj;
    };

    call(build_stage1_prompt(item, templates, config.limits));
    const ParsedTurn& first = traj.turns.front().parsed;

    // An answer ends the episode even when a tool call is also present; the
    // format verdict records the conflict.
    if (first.answer_raw || !first.tool_call_raw) return finish(StageExpectation::Stage1);

    const auto action = parse_tool_action(*first.tool_call_raw);
    if (!action) return finish(StageExpectation::Stage1);

    move_to(Stage::AwaitingTool);
    traj.action = *action;
    traj.observation = tools.dispatch(*action, item, state);
    move_to(Stage::Refining);

    call(build_stage2_prompt(item, traj.turns.front().raw_text, *traj.observation, templates, config.limits));

    // A second tool request is never executed: the single tool round is spent.
    const ParsedTurn& second = traj.turns.back().parsed;
    if (second.tool_call_raw) {
        FollowupAttempt followup;
        followup.tool_call_raw = *second.tool_call_raw;
        auto again = parse_tool_action(*second.tool_call_raw);
        if (again) followup.action = *again;
        followup.observation.tool_id = again ? again->tool_id() : traj.action->tool_id();
        followup.observation.ok = false;
        followup.observation.error_note = "BUDGET_EXHAUSTED";
        traj.followup = std::move(followup);
    }
    return finish(StageExpectation::Stage2);
}

TrajectoryGroup rollout_group(const NewsItem& item, ModelBackend& backend, const ToolRegistry& tools,
                              const PromptTemplateSet& templates, const RolloutConfig& config) {
    if (config.group_size < 2)
        throw Error("GROUP_TOO_SMALL", fmt::format("group size must be at least 2, got {}", config.group_size));

    TrajectoryGroup group;
    group.item_id = item.id;
    group.truth = item.label;
    group.beta = config.beta;
    group.trajectories = run_batch(
        static_cast<std::size_t>(config.group_size),
        [&](std::size_t i) {
            EpisodeConfig ep;
            ep.temperature = config.temperature;
            ep.seed = config.base_seed + i;
            ep.want_logprobs = config.want_logprobs;
            ep.limits = config.limits;
            ep.reference = config.reference;
            return run_episode(item, backend, tools, templates, ep);
        },
        config.concurrency);
    return group;
}

} // namespace factguard
