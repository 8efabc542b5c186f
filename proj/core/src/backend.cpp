#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "factguard/backend.hpp"
#include "factguard/error.hpp"
#include "text_util.hpp"

namespace factguard {
using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
    }
    return "user";
}

std::string_view to_string(FinishReason reason) {
    switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Other: return "other";
    }
    return "other";
}

int estimate_tokens(std::string_view text) { return static_cast<int>((text.size() + 3) / 4); }

int estimate_prompt_tokens(const ModelBackendRequest& request) {
    std::size_t chars = 0;
    for (const auto& m : request.messages) chars += m.text.size();
    return static_cast<int>((chars + 3) / 4);
}

json request_to_json(const ModelBackendRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        json attachments = json::array();
        for (const auto& a : m.attachments)
            attachments.push_back({{"kind", a.kind == Attachment::Kind::Image ? "image" : "video"},
                                   {"path", a.path.generic_string()}});
        messages.push_back({{"role", to_string(m.role)}, {"text", m.text}, {"attachments", attachments}});
    }
    json out{{"messages", messages},
             {"max_tokens", request.max_tokens},
             {"temperature", request.temperature},
             {"want_logprobs", request.want_logprobs}};
    out["seed"] = request.seed ? json(*request.seed) : json(nullptr);
    return out;
}

std::string request_key(const ModelBackendRequest& request) {
    return fmt::format("{:016x}", detail::fnv1a64(request_to_json(request).dump()));
}

std::optional<double> ModelBackend::score(const ModelBackendRequest&, std::string_view) { return std::nullopt; }

} // namespace factguard
