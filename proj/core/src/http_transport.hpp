#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace factguard::detail {

struct HttpResponse {
    int status = 0;
    std::string body;
};

struct HttpPost {
    std::string url; // scheme://host[:port][/path]
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::string content_type = "application/json";
    std::chrono::milliseconds timeout{10000};
};

enum class TransportFailure { Timeout, Connection, BadUrl };

struct TransportError {
    TransportFailure kind;
    std::string message;
};

// One attempt. Throws TransportError when no HTTP response was received.
HttpResponse http_post(const HttpPost& request);

std::string base64_encode(std::string_view bytes);

} // namespace factguard::detail
