#include <cstdlib>
#include <fstream>
#include <iterator>
#include <thread>

#include <nlohmann/json.hpp>

#include "factguard/backend.hpp"
#include "factguard/error.hpp"
#include "http_transport.hpp"

namespace factguard {
using nlohmann::json;

namespace {

std::string env_or(const std::string& name, std::string fallback) {
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::move(fallback);
}

std::string image_data_url(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IO", "cannot read attachment " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::string mime = path.extension() == ".png" ? "image/png" : "image/x-portable-pixmap";
    return "data:" + mime + ";base64," + detail::base64_encode(bytes);
}

} // namespace

HttpBackendConfig HttpBackendConfig::from_env(const std::string& prefix) {
    HttpBackendConfig cfg;
    cfg.base_url = env_or(prefix + "_URL", "http://localhost:8000/v1");
    cfg.model = env_or(prefix + "_MODEL", "factguard");
    cfg.api_key = env_or(prefix + "_API_KEY", "");
    return cfg;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {}

json HttpChatBackend::build_payload(const ModelBackendRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        const std::string role = m.role == Role::Tool ? "user" : std::string(to_string(m.role));
        if (m.attachments.empty()) {
            messages.push_back({{"role", role}, {"content", m.text}});
            continue;
        }
        json parts = json::array();
        for (const auto& a : m.attachments) {
            if (a.kind == Attachment::Kind::Image)
                parts.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_url(a.path)}}}});
            else
                parts.push_back({{"type", "video_url"},
                                 {"video_url", {{"url", "file://" + std::filesystem::absolute(a.path).string()}}}});
        }
        parts.push_back({{"type", "text"}, {"text", m.text}});
        messages.push_back({{"role", role}, {"content", parts}});
    }
    json payload{{"model", config_.model},
                 {"messages", messages},
                 {"max_tokens", request.max_tokens},
                 {"temperature", request.temperature}};
    if (request.want_logprobs) payload["logprobs"] = true;
    if (request.seed) payload["seed"] = *request.seed;
    return payload;
}

ModelBackendResponse HttpChatBackend::parse_completion(const std::string& body) {
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
        throw Error("BACKEND_PROTOCOL", "completion response has no choices");
    const json& choice = doc["choices"][0];
    ModelBackendResponse r;
    const json& content = choice["message"]["content"];
    r.text = content.is_string() ? content.get<std::string>() : std::string{};
    const std::string finish = choice.value("finish_reason", std::string("stop"));
    r.finish_reason = finish == "stop" ? FinishReason::Stop : finish == "length" ? FinishReason::Length
                                                                                : FinishReason::Other;
    if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
        double sum = 0.0;
        int n = 0;
        for (const auto& tok : choice["logprobs"]["content"]) {
            sum += tok.value("logprob", 0.0);
            ++n;
        }
        r.sum_logprob = sum;
        r.token_count = n;
    }
    if (doc.contains("usage") && doc["usage"].contains("completion_tokens"))
        r.token_count = doc["usage"]["completion_tokens"].get<int>();
    else if (r.token_count == 0)
        r.token_count = estimate_tokens(r.text);
    return r;
}

ModelBackendResponse HttpChatBackend::complete(const ModelBackendRequest& request) {
    detail::HttpPost post;
    std::string base = config_.base_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    post.url = base + "/chat/completions";
    if (!config_.api_key.empty()) post.headers.emplace_back("Authorization", "Bearer " + config_.api_key);
    post.body = build_payload(request).dump();
    post.timeout = config_.timeout;

    auto backoff = config_.backoff;
    std::string last;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        try {
            const auto resp = detail::http_post(post);
            if (resp.status >= 500 || resp.status == 429) {
                last = "HTTP " + std::to_string(resp.status);
                continue;
            }
            if (resp.status < 200 || resp.status >= 300)
                throw Error("BACKEND_PROTOCOL", "chat endpoint returned HTTP " + std::to_string(resp.status));
            return parse_completion(resp.body);
        } catch (const detail::TransportError& e) {
            last = e.message;
        }
    }
    throw Error("BACKEND_UNREACHABLE", config_.base_url + " after " + std::to_string(config_.retries + 1) +
                                           " attempts: " + last);
}

} // namespace factguard
