#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "factguard/reward.hpp"

namespace factguard {

/// Reward-engine service speaking newline-delimited JSON.
///
/// Request:  {"id": str, "op": str, "payload": {...}, "config": {...}}
/// Response: {"id": str, "ok": true, "result": {...}}
///        or {"id": str|null, "ok": false, "error": {"code": str, "message": str}}
///
/// Ops and payloads:
///   ping              {}
///   total_reward      {"trajectory": <trajectory>, "truth": "fake"|"real"}
///   group_advantages  {"rewards": [x, ...]}
///   kl_surrogate      {"logp_ref": x, "logp_policy": x}
///   grpo_objective    {"advantages": [x, ...], "logprobs": [<logprobs>, ...], "beta"?: x}
///
/// "config" holds reward keys (same names as the TOML file) overriding the
/// server defaults for that request only.
class BridgeHandler {
public:
    explicit BridgeHandler(RewardSettings defaults = {});

    nlohmann::json handle(const nlohmann::json& request) const;
    // Parses one line and returns the serialized response, without newline.
    std::string handle_line(std::string_view line) const;

private:
    RewardSettings defaults_;
};

// Serves requests from `in` until EOF, one response line per request line.
void serve_stream(std::istream& in, std::ostream& out, const BridgeHandler& handler);

struct BridgeEndpoint {
    std::filesystem::path unix_path; // used when non-empty
    std::uint16_t tcp_port = 0;      // 127.0.0.1; 0 picks a free port
};

/// Accepts connections until `stop` becomes true, one thread per
/// connection. `on_ready` receives the bound address ("unix:PATH" or
/// "tcp:PORT") once listening. Errors: BRIDGE_IO.
void serve_socket(const BridgeEndpoint& endpoint, const BridgeHandler& handler, const std::atomic<bool>& stop,
                  const std::function<void(const std::string&)>& on_ready = {});

} // namespace factguard
