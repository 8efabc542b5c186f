#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/tools.hpp"
#include "http_transport.hpp"

namespace factguard {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::move(fallback);
}

SearchHit hit_from_json(const json& j, int fallback_position) {
    SearchHit hit;
    hit.title = j.value("title", "");
    hit.snippet = j.value("snippet", "");
    hit.link = j.value("link", "");
    const auto pos = j.find("position");
    hit.position = pos != j.end() && pos->is_number_integer() ? pos->get<int>() : fallback_position;
    return hit;
}

} // namespace

HttpSearchConfig HttpSearchConfig::from_env() {
    HttpSearchConfig cfg;
    cfg.base_url = env_or("FACTGUARD_SEARCH_URL", "https://google.serper.dev/search");
    cfg.api_key = env_or("FACTGUARD_SEARCH_API_KEY", "");
    return cfg;
}

std::vector<SearchHit> parse_search_response(const std::string& body) {
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error("PROVIDER_ERROR", "search response is not a JSON object");
    const auto organic = doc.find("organic");
    if (organic == doc.end() || !organic->is_array())
        throw Error("PROVIDER_ERROR", "search response has no organic result array");
    std::vector<SearchHit> hits;
    int index = 0;
    for (const auto& entry : *organic) {
        ++index;
        if (entry.is_object()) hits.push_back(hit_from_json(entry, index));
    }
    return hits;
}

HttpSearchProvider::HttpSearchProvider(HttpSearchConfig config) : config_(std::move(config)) {}

std::vector<SearchHit> HttpSearchProvider::search(const std::string& query, int num_results) {
    detail::HttpPost post;
    post.url = config_.base_url;
    post.headers = {{"X-API-KEY", config_.api_key}};
    post.body = json{{"q", query}, {"num", num_results}}.dump();
    post.timeout = config_.deadline;

    auto backoff = config_.backoff;
    std::string last_failure;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        try {
            const auto response = detail::http_post(post);
            if (response.status < 200 || response.status >= 300)
                throw Error("PROVIDER_ERROR", "search provider returned HTTP " + std::to_string(response.status));
            return parse_search_response(response.body);
        } catch (const detail::TransportError& e) {
            if (e.kind == detail::TransportFailure::BadUrl) throw Error("PROVIDER_ERROR", e.message);
            last_failure = e.message;
        }
    }
    throw Error("PROVIDER_TIMEOUT", "no response after " + std::to_string(config_.retries + 1) +
                                        " attempts: " + last_failure);
}

StubSearchProvider::StubSearchProvider(fs::path dir) : dir_(std::move(dir)) {}

std::string StubSearchProvider::slug(const std::string& query) {
    std::string out;
    bool pending_dash = false;
    for (unsigned char c : query) {
        if (std::isalnum(c)) {
            if (pending_dash && !out.empty()) out += '-';
            pending_dash = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            pending_dash = true;
        }
        if (out.size() >= 80) break;
    }
    return out.empty() ? "query" : out;
}

std::vector<SearchHit> StubSearchProvider::search(const std::string& query, int num_results) {
    fs::path file = dir_ / (slug(query) + ".json");
    if (!fs::exists(file)) file = dir_ / "default.json";
    if (!fs::exists(file)) return {};

    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    const json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_object() && doc.contains("error")) {
        const std::string kind = doc["error"].is_string() ? doc["error"].get<std::string>() : "status";
        if (kind == "timeout") throw Error("PROVIDER_TIMEOUT", "stub fixture " + file.string());
        throw Error("PROVIDER_ERROR", "stub fixture " + file.string());
    }
    auto hits = parse_search_response(buf.str());
    if (num_results >= 0 && hits.size() > static_cast<std::size_t>(num_results)) hits.resize(num_results);
    return hits;
}

} // namespace factguard
