#include <chrono>

#include <fmt/format.h>

#include "factguard/error.hpp"
#include "factguard/tools.hpp"

namespace factguard {

std::map<ToolId, int> ToolBudget::as_map() const {
    std::map<ToolId, int> out{{ToolId::ClipScout, clip_scout_max}};
    if (fact_probe_max) out.emplace(ToolId::FactProbe, *fact_probe_max);
    return out;
}

Clock steady_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
}

Clock frozen_clock() {
    return [] { return std::int64_t{0}; };
}

ToolRegistry::ToolRegistry(ToolRegistryConfig config) : config_(std::move(config)) {
    if (config_.budget.clip_scout_max < 0) throw Error("BAD_CONFIG", "clip_scout_max must be >= 0");
    if (!config_.clock) config_.clock = steady_clock_ms();
}

AgentState ToolRegistry::new_episode_state() const { return AgentState(config_.budget.as_map()); }

Observation ToolRegistry::dispatch(const ToolAction& action, const NewsItem& item, AgentState& state) const {
    Observation obs;
    obs.tool_id = action.tool_id();
    const std::int64_t started = config_.clock();

    if (!state.try_consume(obs.tool_id)) {
        obs.error_note = "BUDGET_EXHAUSTED";
    } else {
        try {
            if (const auto* probe = std::get_if<FactProbeParams>(&action.params)) {
                if (!config_.search) throw Error("PROVIDER_ERROR", "no search provider configured");
                obs.text_report = fact_probe(probe->query, *config_.search, config_.fact_probe).synthesized_text;
            } else {
                const auto& clip = std::get<ClipScoutParams>(action.params);
                obs.frame_grid = clip_scout(clip.start_s, clip.end_s, item, config_.render);
            }
            obs.ok = true;
        } catch (const Error& e) {
            obs.text_report.reset();
            obs.frame_grid.reset();
            obs.error_note = e.code();
        } catch (const std::exception&) {
            obs.text_report.reset();
            obs.frame_grid.reset();
            obs.error_note = obs.tool_id == ToolId::ClipScout ? "DECODE_FAILURE" : "PROVIDER_ERROR";
        }
    }
    obs.latency_ms = config_.clock() - started;
    state.record(obs);
    return obs;
}

std::string format_timestamps(const std::vector<double>& timestamps) {
    std::string out;
    for (double t : timestamps) {
        if (!out.empty()) out += ", ";
        out += fmt::format("{}s", t);
    }
    return out;
}

PromptBlock observation_to_prompt_block(const Observation& obs) {
    if (!obs.ok) return {"TOOL ERROR: " + obs.error_note.value_or("UNKNOWN"), std::nullopt};
    if (obs.tool_id == ToolId::FactProbe)
        return {"EVIDENCE REPORT:\n" + obs.text_report.value_or(std::string(kNoEvidenceFound)), std::nullopt};
    const FrameGrid& grid = *obs.frame_grid;
    return {"CLIP INSPECTION (2x2 grid, row-major): frames at " + format_timestamps(grid.sample_timestamps),
            grid.image};
}

} // namespace factguard
