#include "http_transport.hpp"

#include <httplib.h>

namespace factguard::detail {
namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError{TransportFailure::BadUrl, "missing scheme in " + url};
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpResponse http_post(const HttpPost& request) {
    const SplitUrl target = split_url(request.url);
    httplib::Client client(target.origin);
    if (!client.is_valid()) throw TransportError{TransportFailure::BadUrl, "unsupported URL " + request.url};
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);

    auto result = client.Post(target.path, headers, request.body, request.content_type);
    if (!result) {
        const auto err = result.error();
        const bool timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
        throw TransportError{timeout ? TransportFailure::Timeout : TransportFailure::Connection,
                             httplib::to_string(err)};
    }
    return {result->status, result->body};
}

std::string base64_encode(std::string_view bytes) {
    return httplib::detail::base64_encode(std::string(bytes));
}

} // namespace factguard::detail
