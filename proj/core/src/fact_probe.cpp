#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "factguard/error.hpp"
#include "factguard/tools.hpp"
#include "text_util.hpp"

namespace factguard {

std::vector<std::string> default_blocklist() {
    return {"facebook.com",  "fb.com",       "instagram.com", "twitter.com", "x.com",       "t.co",
            "tiktok.com",    "douyin.com",   "kuaishou.com",  "youtube.com", "youtu.be",    "reddit.com",
            "weibo.com",     "weibo.cn",     "bilibili.com",  "pinterest.com", "quora.com", "linkedin.com",
            "snapchat.com",  "threads.net",  "tumblr.com",    "zhihu.com",   "xiaohongshu.com", "vk.com",
            "telegram.org",  "t.me",         "discord.com",   "medium.com"};
}

std::vector<std::string> load_blocklist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IO", "cannot read blocklist " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto host = detail::lower(detail::trim(line));
        if (!host.empty()) out.push_back(host);
    }
    return out;
}

std::string url_host(std::string_view url) {
    std::string_view rest = url;
    if (const auto scheme = rest.find("://"); scheme != std::string_view::npos) rest.remove_prefix(scheme + 3);
    rest = rest.substr(0, rest.find_first_of("/?#"));
    if (const auto at = rest.rfind('@'); at != std::string_view::npos) rest.remove_prefix(at + 1);
    if (!rest.empty() && rest.front() != '[') rest = rest.substr(0, rest.find(':'));
    std::string host = detail::lower(rest);
    while (!host.empty() && host.back() == '.') host.pop_back();
    return host;
}

bool host_blocked(std::string_view host, const std::vector<std::string>& blocklist) {
    for (const auto& suffix : blocklist) {
        if (host == suffix) return true;
        if (host.size() > suffix.size() && host.ends_with(suffix) && host[host.size() - suffix.size() - 1] == '.')
            return true;
    }
    return false;
}

EvidenceReport fact_probe(const std::string& query, SearchProvider& provider, const FactProbeConfig& config) {
    if (detail::is_blank(query)) throw Error("BAD_PARAMS", "FactProbe query is empty");

    auto hits = provider.search(query, config.request_results);
    std::stable_sort(hits.begin(), hits.end(),
                     [](const SearchHit& a, const SearchHit& b) { return a.position < b.position; });

    EvidenceReport report;
    report.query = query;
    for (const auto& hit : hits) {
        if (host_blocked(url_host(hit.link), config.blocklist) ||
            static_cast<int>(report.entries.size()) >= config.top_k) {
            ++report.sources_dropped;
            continue;
        }
        report.entries.push_back({hit.title, hit.snippet, hit.link, static_cast<int>(report.entries.size()) + 1});
    }

    if (report.entries.empty()) {
        report.synthesized_text = std::string(kNoEvidenceFound);
    } else {
        std::string text;
        for (const auto& e : report.entries) {
            if (!text.empty()) text += '\n';
            text += fmt::format("[{}] {} — {} ({})", e.rank, e.title, e.snippet, e.url);
        }
        text.resize(detail::utf8_prefix(text, static_cast<std::size_t>(std::max(0, config.max_report_chars))));
        report.synthesized_text = std::move(text);
    }
    return report;
}

} // namespace factguard
