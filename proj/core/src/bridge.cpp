#include "factguard/bridge.hpp"

#include <cerrno>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <fmt/format.h>

#include "factguard/error.hpp"
#include "factguard/serialization.hpp"

namespace factguard {
using nlohmann::json;

namespace {

json error_response(const json& id, std::string_view code, std::string_view message) {
    return {{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

const json& need(const json& payload, const char* name) {
    if (!payload.contains(name)) throw Error("SCHEMA", fmt::format("payload.{} is required", name));
    return payload.at(name);
}

double need_number(const json& payload, const char* name) {
    const json& v = need(payload, name);
    if (!v.is_number()) throw Error("SCHEMA", fmt::format("payload.{} must be a number", name));
    return v.get<double>();
}

std::vector<double> need_numbers(const json& payload, const char* name) {
    const json& v = need(payload, name);
    if (!v.is_array()) throw Error("SCHEMA", fmt::format("payload.{} must be an array", name));
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw Error("SCHEMA", fmt::format("payload.{} must contain numbers only", name));
        out.push_back(x.get<double>());
    }
    return out;
}

RewardSettings settings_for(const RewardSettings& defaults, const json& request) {
    if (!request.contains("config") || request.at("config").is_null()) return defaults;
    const json& cfg = request.at("config");
    if (!cfg.is_object()) throw Error("SCHEMA", "config must be an object");
    std::vector<std::pair<std::string, double>> values;
    for (const auto& [key, v] : cfg.items()) {
        if (!v.is_number()) throw Error("SCHEMA", fmt::format("config.{} must be a number", key));
        values.emplace_back(key, v.get<double>());
    }
    try {
        return with_overrides(defaults, values);
    } catch (const Error& e) {
        throw Error("SCHEMA", e.what());
    }
}

json run_op(const std::string& op, const json& payload, const RewardSettings& s) {
    if (op == "ping") return {{"pong", true}};
    if (op == "total_reward") {
        const Trajectory t = trajectory_from_json(need(payload, "trajectory"));
        const json& truth_j = need(payload, "truth");
        auto truth = truth_j.is_string() ? label_from_string(truth_j.get<std::string>()) : std::nullopt;
        if (!truth) throw Error("SCHEMA", "payload.truth must be \"fake\" or \"real\"");
        return to_json(total_reward(t, *truth, s.rewards));
    }
    if (op == "group_advantages") {
        const auto adv = group_advantages(need_numbers(payload, "rewards"));
        return {{"values", adv.values}, {"degenerate", adv.degenerate}};
    }
    if (op == "kl_surrogate") {
        return {{"kl", kl_surrogate(need_number(payload, "logp_ref"), need_number(payload, "logp_policy"))}};
    }
    if (op == "grpo_objective") {
        const auto advantages = need_numbers(payload, "advantages");
        const json& lps = need(payload, "logprobs");
        if (!lps.is_array()) throw Error("SCHEMA", "payload.logprobs must be an array");
        std::vector<TrajectoryLogProbs> logprobs;
        for (const auto& lp : lps) {
            if (lp.is_null()) throw Error("MISSING_LOGPROBS", "a trajectory has no log-probabilities");
            logprobs.push_back(logprobs_from_json(lp));
        }
        const double beta = payload.contains("beta") ? need_number(payload, "beta") : s.beta;
        return to_json(grpo_objective(advantages, logprobs, beta));
    }
    throw Error("UNKNOWN_OP", fmt::format("unknown op '{}'", op));
}

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return;
        off += static_cast<std::size_t>(n);
    }
}

void serve_connection(int fd, const BridgeHandler& handler, const std::atomic<bool>& stop) {
    std::string buffer;
    char chunk[4096];
    while (!stop.load()) {
        pollfd p{fd, POLLIN, 0};
        const int ready = ::poll(&p, 1, 100);
        if (ready < 0 && errno == EINTR) continue;
        if (ready < 0) break;
        if (ready == 0) continue;
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buffer.find('\n')) != std::string::npos) {
            const std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            write_all(fd, handler.handle_line(line) + "\n");
        }
    }
    ::close(fd);
}

[[noreturn]] void io_fail(const std::string& what) {
    throw Error("BRIDGE_IO", fmt::format("{}: {}", what, std::strerror(errno)));
}

} // namespace

BridgeHandler::BridgeHandler(RewardSettings defaults) : defaults_(std::move(defaults)) {}

json BridgeHandler::handle(const json& request) const {
    if (!request.is_object()) return error_response(nullptr, "SCHEMA", "request must be a JSON object");
    json id = request.contains("id") ? request.at("id") : json(nullptr);
    if (!id.is_string()) return error_response(nullptr, "SCHEMA", "id must be a string");
    if (!request.contains("op") || !request.at("op").is_string())
        return error_response(id, "SCHEMA", "op must be a string");
    const json payload = request.contains("payload") ? request.at("payload") : json::object();
    if (!payload.is_object()) return error_response(id, "SCHEMA", "payload must be an object");
    try {
        const RewardSettings s = settings_for(defaults_, request);
        return {{"id", id}, {"ok", true}, {"result", run_op(request.at("op").get<std::string>(), payload, s)}};
    } catch (const Error& e) {
        return error_response(id, e.code(), e.what());
    } catch (const json::exception& e) {
        return error_response(id, "SCHEMA", e.what());
    }
}

std::string BridgeHandler::handle_line(std::string_view line) const {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error& e) {
        return error_response(nullptr, "SCHEMA", std::string("malformed JSON: ") + e.what()).dump();
    }
    return handle(request).dump(-1, ' ', false, json::error_handler_t::replace);
}

void serve_stream(std::istream& in, std::ostream& out, const BridgeHandler& handler) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out << handler.handle_line(line) << '\n' << std::flush;
    }
}

void serve_socket(const BridgeEndpoint& endpoint, const BridgeHandler& handler, const std::atomic<bool>& stop,
                  const std::function<void(const std::string&)>& on_ready) {
    const bool use_unix = !endpoint.unix_path.empty();
    const int listener = ::socket(use_unix ? AF_UNIX : AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listener < 0) io_fail("socket");

    std::string address;
    if (use_unix) {
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        const std::string path = endpoint.unix_path.string();
        if (path.size() >= sizeof addr.sun_path) {
            ::close(listener);
            throw Error("BRIDGE_IO", "socket path too long: " + path);
        }
        std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
        ::unlink(path.c_str());
        if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(listener);
            io_fail("bind " + path);
        }
        address = "unix:" + path;
    } else {
        const int one = 1;
        ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(endpoint.tcp_port);
        if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(listener);
            io_fail("bind");
        }
        socklen_t len = sizeof addr;
        ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
        address = fmt::format("tcp:{}", ntohs(addr.sin_port));
    }
    if (::listen(listener, 64) < 0) {
        ::close(listener);
        io_fail("listen");
    }
    if (on_ready) on_ready(address);

    std::vector<std::thread> workers;
    while (!stop.load()) {
        pollfd p{listener, POLLIN, 0};
        const int ready = ::poll(&p, 1, 100);
        if (ready <= 0) continue;
        const int fd = ::accept4(listener, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        workers.emplace_back(serve_connection, fd, std::cref(handler), std::cref(stop));
    }
    for (auto& w : workers) w.join();
    ::close(listener);
    if (use_unix) ::unlink(endpoint.unix_path.c_str());
}

} // namespace factguard
