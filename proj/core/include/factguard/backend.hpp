#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace factguard {

enum class Role { System, User, Assistant, Tool };
std::string_view to_string(Role role);

struct Attachment {
    enum class Kind { Image, Video };
    Kind kind = Kind::Image;
    std::filesystem::path path;
    bool operator==(const Attachment&) const = default;
};

struct ChatMessage {
    Role role = Role::User;
    std::string text;
    std::vector<Attachment> attachments;
    bool operator==(const ChatMessage&) const = default;
};

inline constexpr int kMaxPromptTokens = 16384;
inline constexpr int kMaxResponseTokens = 768;

struct ModelBackendRequest {
    std::vector<ChatMessage> messages;
    int max_tokens = kMaxResponseTokens;
    double temperature = 0.0;
    bool want_logprobs = false;
    std::optional<std::uint64_t> seed;
    bool operator==(const ModelBackendRequest&) const = default;
};

enum class FinishReason { Stop, Length, Other };
std::string_view to_string(FinishReason reason);

struct ModelBackendResponse {
    std::string text;
    std::optional<double> sum_logprob;
    int token_count = 0;
    FinishReason finish_reason = FinishReason::Stop;
};

// Character/4 heuristic used for every prompt-length decision.
int estimate_tokens(std::string_view text);
int estimate_prompt_tokens(const ModelBackendRequest& request);

// Stable FNV-1a hex digest over the canonical JSON form of the request
// (messages, max_tokens, temperature, want_logprobs, seed).
std::string request_key(const ModelBackendRequest& request);
nlohmann::json request_to_json(const ModelBackendRequest& request);

/// Chat model endpoint. Implementations are shared by concurrent episodes
/// and must be thread-safe. Unrecoverable transport failure throws
/// Error{"BACKEND_UNREACHABLE"}.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual ModelBackendResponse complete(const ModelBackendRequest& request) = 0;

    // Summed log-probability of `continuation` given the request, when the
    // backend can score text it did not generate (reference-model use).
    virtual std::optional<double> score(const ModelBackendRequest& request, std::string_view continuation);

    virtual std::string name() const = 0;
};

/// Scripted backend for tests and offline runs.
///
/// Script file (JSON):
///   {"mode": "sequence" | "keyed",
///    "responses": [{"text": ..., "sum_logprob"?: x, "token_count"?: n,
///                   "finish_reason"?: "stop",
///                   "key"?: <request_key>, "contains"?: <substring>,
///                   "stage"?: 1|2, "seed"?: n}],
///    "default"?: {...response...},
///    "scores"?: [{"text": <continuation>, "sum_logprob": x}],
///    "unreachable"?: true}
///
/// In sequence mode responses are served in order, cycling is an error. In
/// keyed mode the first entry whose every given selector matches wins;
/// "contains" is tested against the concatenated message texts and "stage"
/// is one plus the number of assistant messages in the request.
class MockBackend final : public ModelBackend {
public:
    explicit MockBackend(const nlohmann::json& script, std::string name = "mock");
    static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

    ModelBackendResponse complete(const ModelBackendRequest& request) override;
    std::optional<double> score(const ModelBackendRequest& request, std::string_view continuation) override;
    std::string name() const override { return name_; }

    std::size_t calls() const;
    std::vector<ModelBackendRequest> requests() const;

    struct Entry;

private:
    ModelBackendResponse materialize(const Entry& entry, const ModelBackendRequest& request) const;

    std::string name_;
    bool sequence_ = true;
    bool unreachable_ = false;
    std::vector<std::shared_ptr<Entry>> entries_;
    std::shared_ptr<Entry> default_;
    std::vector<std::pair<std::string, double>> scores_;

    mutable std::mutex mu_;
    std::size_t cursor_ = 0;
    std::vector<ModelBackendRequest> log_;
};

struct HttpBackendConfig {
    std::string base_url; // e.g. http://localhost:8000/v1
    std::string model;
    std::string api_key;
    std::chrono::milliseconds timeout{120000};
    int retries = 2;
    std::chrono::milliseconds backoff{500};

    // FACTGUARD_BACKEND_URL, FACTGUARD_BACKEND_MODEL, FACTGUARD_BACKEND_API_KEY.
    static HttpBackendConfig from_env(const std::string& prefix = "FACTGUARD_BACKEND");
};

/// OpenAI-compatible /chat/completions client. Images are sent inline as
/// base64 data URLs, videos as file:// references. Tool-role messages are
/// sent with the user role since tool results travel as plain text blocks.
class HttpChatBackend final : public ModelBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);
    ModelBackendResponse complete(const ModelBackendRequest& request) override;
    std::string name() const override { return config_.model; }

    nlohmann::json build_payload(const ModelBackendRequest& request) const;
    static ModelBackendResponse parse_completion(const std::string& body);

private:
    HttpBackendConfig config_;
};

} // namespace factguard
