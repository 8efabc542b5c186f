#include <fstream>

#include <nlohmann/json.hpp>

#include "factguard/backend.hpp"
#include "factguard/error.hpp"
#include "text_util.hpp"

namespace factguard {
using nlohmann::json;

struct MockBackend::Entry {
    std::string text;
    std::optional<double> sum_logprob;
    std::optional<int> token_count;
    FinishReason finish_reason = FinishReason::Stop;

    std::optional<std::string> key;
    std::optional<std::string> contains;
    std::optional<int> stage;
    std::optional<std::uint64_t> seed;

    bool matches(const ModelBackendRequest& request, const std::string& request_hash, const std::string& haystack,
                 int request_stage) const {
        if (key && *key != request_hash) return false;
        if (contains && haystack.find(*contains) == std::string::npos) return false;
        if (stage && *stage != request_stage) return false;
        if (seed && request.seed != seed) return false;
        return true;
    }
};

namespace {

std::shared_ptr<MockBackend::Entry> parse_entry(const json& j);

} // namespace

MockBackend::MockBackend(const json& script, std::string name) : name_(std::move(name)) {
    if (!script.is_object()) throw Error("SCHEMA", "mock script must be a JSON object");
    const std::string mode = script.value("mode", std::string("sequence"));
    if (mode != "sequence" && mode != "keyed") throw Error("SCHEMA", "mock script mode must be sequence or keyed");
    sequence_ = mode == "sequence";
    unreachable_ = script.value("unreachable", false);
    if (const auto it = script.find("responses"); it != script.end()) {
        if (!it->is_array()) throw Error("SCHEMA", "mock script responses must be an array");
        for (const auto& e : *it) entries_.push_back(parse_entry(e));
    }
    if (const auto it = script.find("default"); it != script.end() && !it->is_null()) default_ = parse_entry(*it);
    if (const auto it = script.find("scores"); it != script.end()) {
        for (const auto& s : *it) scores_.emplace_back(s.at("text").get<std::string>(), s.at("sum_logprob").get<double>());
    }
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IO", "cannot read mock script " + path.string());
    const json script = json::parse(in, nullptr, false);
    if (script.is_discarded()) throw Error("SCHEMA", "mock script is not valid JSON: " + path.string());
    return std::make_shared<MockBackend>(script, "mock:" + path.filename().string());
}

ModelBackendResponse MockBackend::materialize(const Entry& entry, const ModelBackendRequest& request) const {
    ModelBackendResponse r;
    r.text = entry.text;
    r.finish_reason = entry.finish_reason;
    r.token_count = entry.token_count.value_or(estimate_tokens(entry.text));
    if (r.token_count > request.max_tokens) {
        r.text.resize(detail::utf8_prefix(r.text, static_cast<std::size_t>(request.max_tokens) * 4));
        r.token_count = request.max_tokens;
        r.finish_reason = FinishReason::Length;
    }
    if (request.want_logprobs) r.sum_logprob = entry.sum_logprob;
    return r;
}

ModelBackendResponse MockBackend::complete(const ModelBackendRequest& request) {
    if (unreachable_) throw Error("BACKEND_UNREACHABLE", name_ + " is scripted as unreachable");

    std::shared_ptr<Entry> chosen;
    {
        std::lock_guard lock(mu_);
        log_.push_back(request);
        if (sequence_) {
            if (cursor_ < entries_.size()) chosen = entries_[cursor_++];
        } else {
            const std::string hash = entries_.empty() ? std::string{} : request_key(request);
            std::string haystack;
            int stage = 1;
            for (const auto& m : request.messages) {
                haystack += m.text;
                haystack += '\n';
                if (m.role == Role::Assistant) ++stage;
            }
            for (const auto& e : entries_) {
                if (e->matches(request, hash, haystack, stage)) {
                    chosen = e;
                    break;
                }
            }
        }
        if (!chosen) chosen = default_;
    }
    if (!chosen) throw Error("SCRIPT_EXHAUSTED", name_ + " has no scripted response for this request");
    return materialize(*chosen, request);
}

std::optional<double> MockBackend::score(const ModelBackendRequest&, std::string_view continuation) {
    for (const auto& [text, logprob] : scores_)
        if (text == continuation) return logprob;
    return std::nullopt;
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

std::vector<ModelBackendRequest> MockBackend::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

namespace {

std::shared_ptr<MockBackend::Entry> parse_entry(const json& j) {
    if (j.is_string()) {
        auto e = std::make_shared<MockBackend::Entry>();
        e->text = j.get<std::string>();
        return e;
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
        throw Error("SCHEMA", "mock response entries need a string 'text'");
    auto e = std::make_shared<MockBackend::Entry>();
    e->text = j["text"].get<std::string>();
    if (j.contains("sum_logprob") && !j["sum_logprob"].is_null()) e->sum_logprob = j["sum_logprob"].get<double>();
    if (j.contains("token_count")) e->token_count = j["token_count"].get<int>();
    const std::string finish = j.value("finish_reason", std::string("stop"));
    e->finish_reason = finish == "stop" ? FinishReason::Stop : finish == "length" ? FinishReason::Length
                                                                                  : FinishReason::Other;
    if (j.contains("key")) e->key = j["key"].get<std::string>();
    if (j.contains("contains")) e->contains = j["contains"].get<std::string>();
    if (j.contains("stage")) e->stage = j["stage"].get<int>();
    if (j.contains("seed")) e->seed = j["seed"].get<std::uint64_t>();
    return e;
}

} // namespace

} // namespace factguard
