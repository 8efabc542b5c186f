#include "factguard/serialization.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "factguard/error.hpp"
#include "factguard/turn_parser.hpp"

namespace factguard {
using nlohmann::json;

namespace {

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw Error("SCHEMA", fmt::format("missing field '{}'", name));
    return j.at(name);
}

template <typename T>
T get(const json& j, const char* name) {
    try {
        return field(j, name).get<T>();
    } catch (const json::exception&) {
        throw Error("SCHEMA", fmt::format("field '{}' has the wrong type", name));
    }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* name) {
    if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
    return get<T>(j, name);
}

ToolId tool_id_from(const json& j, const char* name) {
    auto id = tool_from_string(get<std::string>(j, name));
    if (!id) throw Error("SCHEMA", fmt::format("field '{}' is not a tool", name));
    return *id;
}

std::optional<Label> label_opt(const json& j, const char* name) {
    auto text = get_opt<std::string>(j, name);
    if (!text) return std::nullopt;
    auto label = label_from_string(*text);
    if (!label) throw Error("SCHEMA", fmt::format("field '{}' is not a label", name));
    return label;
}

} // namespace

json to_json(const NewsItem& item) {
    return json{{"id", item.id},
                {"video_path", item.video_path.generic_string()},
                {"duration_s", item.video_duration_s},
                {"transcript", item.audio_transcript},
                {"metadata_text", item.metadata_text},
                {"label", to_string(item.label)},
                {"published_at", format_rfc3339(item.published_at)},
                {"dataset", to_string(item.source_dataset)}};
}

json to_json(const ToolAction& action) {
    json j{{"tool", to_string(action.tool_id())}};
    if (const auto* fp = std::get_if<FactProbeParams>(&action.params)) {
        j["query"] = fp->query;
    } else {
        const auto& cs = std::get<ClipScoutParams>(action.params);
        j["start_s"] = cs.start_s;
        j["end_s"] = cs.end_s;
    }
    return j;
}

json to_json(const Observation& obs) {
    json j{{"tool", to_string(obs.tool_id)}, {"ok", obs.ok}, {"latency_ms", obs.latency_ms}};
    j["text_report"] = obs.text_report ? json(*obs.text_report) : json(nullptr);
    if (obs.frame_grid) {
        const auto& g = *obs.frame_grid;
        j["frame_grid"] = {{"start_s", g.interval_start_s}, {"end_s", g.interval_end_s},
                           {"sample_timestamps", g.sample_timestamps}, {"image", g.image.generic_string()},
                           {"width", g.width}, {"height", g.height}};
    } else {
        j["frame_grid"] = nullptr;
    }
    j["error_note"] = obs.error_note ? json(*obs.error_note) : json(nullptr);
    return j;
}

json to_json(const FormatVerdict& fv) {
    json v = json::array();
    for (auto code : fv.violations) v.push_back(to_string(code));
    return {{"well_formed", fv.well_formed}, {"answer_parseable", fv.answer_parseable}, {"violations", v}};
}

json to_json(const TrajectoryLogProbs& lp) {
    return {{"sum_logp_policy", lp.sum_logp_policy},
            {"sum_logp_rollout", lp.sum_logp_rollout},
            {"sum_logp_reference", lp.sum_logp_reference},
            {"token_count", lp.token_count}};
}

json to_json(const Trajectory& t) {
    json turns = json::array();
    for (const auto& turn : t.turns) turns.push_back({{"role", turn.role}, {"raw_text", turn.raw_text}});
    json j{{"item_id", t.item_id}};
    j["seed"] = t.seed ? json(*t.seed) : json(nullptr);
    j["turns"] = std::move(turns);
    j["action"] = t.action ? to_json(*t.action) : json(nullptr);
    j["observation"] = t.observation ? to_json(*t.observation) : json(nullptr);
    if (t.followup) {
        j["followup"] = {{"tool_call_raw", t.followup->tool_call_raw},
                         {"action", t.followup->action ? to_json(*t.followup->action) : json(nullptr)},
                         {"observation", to_json(t.followup->observation)}};
    } else {
        j["followup"] = nullptr;
    }
    j["verdict"] = t.verdict ? json(to_string(*t.verdict)) : json(nullptr);
    j["token_logprobs"] = t.token_logprobs ? to_json(*t.token_logprobs) : json(nullptr);
    j["format_verdict"] = to_json(t.format_verdict);
    return j;
}

json to_json(const TrajectoryGroup& g) {
    json trajs = json::array();
    for (const auto& t : g.trajectories) trajs.push_back(to_json(t));
    return {{"item_id", g.item_id}, {"truth", to_string(g.truth)}, {"beta", g.beta},
            {"trajectories", trajs}, {"rewards", g.rewards},        {"advantages", g.advantages}};
}

json to_json(const RewardBreakdown& b) {
    return {{"r_acc", b.r_acc}, {"r_format", b.r_format}, {"r_risk", b.r_risk}, {"r_tool", b.r_tool},
            {"total", b.total}, {"is_fp", b.is_fp},       {"is_fn", b.is_fn},   {"tool_used", b.tool_used}};
}

json to_json(const GrpoResult& r) {
    json per = json::array();
    for (const auto& t : r.per_traj) per.push_back({{"ratio", t.ratio}, {"weighted_adv", t.weighted_adv}, {"kl", t.kl}});
    return {{"objective", r.objective}, {"per_traj", per}};
}

json to_json(const ScoredGroup& s) {
    json j = to_json(s.group);
    json bd = json::array();
    for (const auto& b : s.breakdowns) bd.push_back(to_json(b));
    j["breakdowns"] = std::move(bd);
    j["degenerate"] = s.degenerate;
    j["grpo"] = s.grpo ? to_json(*s.grpo) : json(nullptr);
    return j;
}

ToolAction tool_action_from_json(const json& j) {
    const ToolId id = tool_id_from(j, "tool");
    if (id == ToolId::FactProbe) return ToolAction{FactProbeParams{get<std::string>(j, "query")}};
    return ToolAction{ClipScoutParams{get<double>(j, "start_s"), get<double>(j, "end_s")}};
}

Observation observation_from_json(const json& j) {
    Observation obs;
    obs.tool_id = tool_id_from(j, "tool");
    obs.ok = get<bool>(j, "ok");
    obs.latency_ms = get<std::int64_t>(j, "latency_ms");
    obs.text_report = get_opt<std::string>(j, "text_report");
    obs.error_note = get_opt<std::string>(j, "error_note");
    if (j.contains("frame_grid") && !j.at("frame_grid").is_null()) {
        const json& g = j.at("frame_grid");
        FrameGrid grid;
        grid.interval_start_s = get<double>(g, "start_s");
        grid.interval_end_s = get<double>(g, "end_s");
        grid.sample_timestamps = get<std::vector<double>>(g, "sample_timestamps");
        grid.image = get<std::string>(g, "image");
        grid.width = get<int>(g, "width");
        grid.height = get<int>(g, "height");
        obs.frame_grid = std::move(grid);
    }
    return obs;
}

FormatVerdict format_verdict_from_json(const json& j) {
    FormatVerdict fv;
    fv.well_formed = get<bool>(j, "well_formed");
    fv.answer_parseable = get<bool>(j, "answer_parseable");
    for (const auto& code : get<std::vector<std::string>>(j, "violations")) {
        auto v = format_violation_from_string(code);
        if (!v) throw Error("SCHEMA", "unknown format violation '" + code + "'");
        fv.violations.push_back(*v);
    }
    return fv;
}

TrajectoryLogProbs logprobs_from_json(const json& j) {
    return {get<double>(j, "sum_logp_policy"), get<double>(j, "sum_logp_rollout"),
            get<double>(j, "sum_logp_reference"), get<int>(j, "token_count")};
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory t;
    t.item_id = get<std::string>(j, "item_id");
    t.seed = get_opt<std::uint64_t>(j, "seed");
    const json& turns = field(j, "turns");
    if (!turns.is_array()) throw Error("SCHEMA", "field 'turns' must be an array");
    for (const auto& tj : turns) {
        Turn turn;
        turn.role = tj.value("role", std::string("assistant"));
        turn.raw_text = get<std::string>(tj, "raw_text");
        turn.parsed = parse_turn(turn.raw_text);
        t.turns.push_back(std::move(turn));
    }
    if (j.contains("action") && !j.at("action").is_null()) t.action = tool_action_from_json(j.at("action"));
    if (j.contains("observation") && !j.at("observation").is_null())
        t.observation = observation_from_json(j.at("observation"));
    if (j.contains("followup") && !j.at("followup").is_null()) {
        const json& f = j.at("followup");
        FollowupAttempt fa;
        fa.tool_call_raw = get<std::string>(f, "tool_call_raw");
        if (f.contains("action") && !f.at("action").is_null()) fa.action = tool_action_from_json(f.at("action"));
        fa.observation = observation_from_json(field(f, "observation"));
        t.followup = std::move(fa);
    }
    t.verdict = label_opt(j, "verdict");
    if (j.contains("token_logprobs") && !j.at("token_logprobs").is_null())
        t.token_logprobs = logprobs_from_json(j.at("token_logprobs"));
    t.format_verdict = format_verdict_from_json(field(j, "format_verdict"));
    return t;
}

TrajectoryGroup group_from_json(const json& j) {
    TrajectoryGroup g;
    g.item_id = get<std::string>(j, "item_id");
    auto truth = label_opt(j, "truth");
    if (!truth) throw Error("SCHEMA", "missing field 'truth'");
    g.truth = *truth;
    g.beta = j.contains("beta") ? get<double>(j, "beta") : kDefaultKlBeta;
    const json& trajs = field(j, "trajectories");
    if (!trajs.is_array()) throw Error("SCHEMA", "field 'trajectories' must be an array");
    for (const auto& tj : trajs) g.trajectories.push_back(trajectory_from_json(tj));
    if (j.contains("rewards")) g.rewards = get<std::vector<double>>(j, "rewards");
    if (j.contains("advantages")) g.advantages = get<std::vector<double>>(j, "advantages");
    return g;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IO", "cannot read " + path.string());
    std::vector<json> rows;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ValidationError("SCHEMA", "line " + std::to_string(lineno),
                                  fmt::format("{}:{}: malformed JSON ({})", path.string(), lineno, e.what()));
        }
    }
    return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) throw Error("IO", "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("IO", "cannot rename into " + path.string() + ": " + ec.message());
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::string text;
    for (const auto& r : rows) {
        text += r.dump(-1, ' ', false, json::error_handler_t::replace);
        text += '\n';
    }
    write_text_file(path, text);
}

} // namespace factguard
