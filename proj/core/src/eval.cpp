#include "factguard/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/serialization.hpp"
#include "text_util.hpp"

namespace factguard {
using nlohmann::json;
namespace fs = std::filesystem;

std::vector<NewsItem> load_manifest(const fs::path& path) {
    std::vector<json> rows;
    std::vector<std::size_t> linenos;
    {
        std::ifstream in(path);
        if (!in) throw Error("IO", "cannot read " + path.string());
        std::string line;
        for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
            if (detail::is_blank(line)) continue;
            try {
                rows.push_back(json::parse(line));
            } catch (const json::parse_error&) {
                throw ValidationError("SCHEMA", fmt::format("line {}", lineno),
                                      fmt::format("{}:{}: malformed JSON", path.string(), lineno));
            }
            linenos.push_back(lineno);
        }
    }

    const fs::path base = path.parent_path();
    std::vector<NewsItem> items;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        NewsItem item;
        try {
            item = validate_news_item(rows[i]);
        } catch (const ValidationError& e) {
            throw ValidationError("SCHEMA", fmt::format("line {}: {}", linenos[i], e.field()),
                                  fmt::format("{}:{}: {}", path.string(), linenos[i], e.what()));
        }
        if (!seen.insert(item.id).second)
            throw ValidationError("DUPLICATE_ID", fmt::format("line {}: id", linenos[i]),
                                  fmt::format("{}:{}: id '{}' appears more than once", path.string(), linenos[i], item.id));
        if (item.video_path.is_relative() && !base.empty()) item.video_path = base / item.video_path;
        items.push_back(std::move(item));
    }
    return items;
}

void write_manifest(const fs::path& path, const std::vector<NewsItem>& items) {
    std::vector<json> rows;
    rows.reserve(items.size());
    for (const auto& item : items) rows.push_back(to_json(item));
    write_jsonl(path, rows);
}

Split temporal_split(std::vector<NewsItem> items, double test_fraction) {
    if (items.empty()) throw Error("EMPTY_INPUT", "no items to split");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("BAD_FRACTION", fmt::format("test fraction must be in (0, 1), got {}", test_fraction));
    std::sort(items.begin(), items.end(), [](const NewsItem& a, const NewsItem& b) {
        if (a.published_at != b.published_at) return a.published_at < b.published_at;
        return a.id < b.id;
    });
    const std::size_t n = items.size();
    // Guard against 0.15 * 20 = 3.0000000000000004 rounding up to 4.
    const double raw = test_fraction * static_cast<double>(n);
    const double nearest = std::round(raw);
    std::size_t n_test = std::fabs(raw - nearest) < 1e-9 ? static_cast<std::size_t>(nearest)
                                                         : static_cast<std::size_t>(std::ceil(raw));
    n_test = std::clamp<std::size_t>(n_test, 1, n);

    Split out;
    const auto cut = items.begin() + static_cast<std::ptrdiff_t>(n - n_test);
    out.train.assign(std::make_move_iterator(items.begin()), std::make_move_iterator(cut));
    out.test.assign(std::make_move_iterator(cut), std::make_move_iterator(items.end()));
    return out;
}

std::vector<TruthRow> truth_of(const std::vector<NewsItem>& items) {
    std::vector<TruthRow> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back({it.id, it.label});
    return out;
}

std::vector<Prediction> load_predictions(const fs::path& path) {
    std::vector<Prediction> out;
    std::size_t row = 0;
    for (const auto& j : read_jsonl(path)) {
        ++row;
        const char* key = j.contains("item_id") ? "item_id" : "id";
        if (!j.contains(key) || !j.at(key).is_string())
            throw Error("SCHEMA", fmt::format("{}: row {} has no item_id/id", path.string(), row));
        Prediction p{j.at(key).get<std::string>(), std::nullopt};
        if (j.contains("verdict") && !j.at("verdict").is_null()) {
            if (!j.at("verdict").is_string())
                throw Error("SCHEMA", fmt::format("{}: row {} verdict must be a string", path.string(), row));
            p.verdict = label_from_string(j.at("verdict").get<std::string>());
            if (!p.verdict)
                throw Error("SCHEMA", fmt::format("{}: row {} verdict is not fake/real", path.string(), row));
        }
        out.push_back(std::move(p));
    }
    return out;
}

Metrics compute_metrics(const std::vector<Prediction>& predictions, const std::vector<TruthRow>& truth) {
    std::map<std::string, Label> labels;
    for (const auto& t : truth) {
        if (!labels.emplace(t.id, t.label).second) throw Error("ID_MISMATCH", "duplicate truth id '" + t.id + "'");
    }
    if (predictions.size() != labels.size())
        throw Error("ID_MISMATCH", fmt::format("{} predictions for {} labeled items", predictions.size(), labels.size()));

    Metrics m;
    std::set<std::string> seen;
    for (const auto& p : predictions) {
        const auto it = labels.find(p.id);
        if (it == labels.end()) throw Error("ID_MISMATCH", "prediction for unknown id '" + p.id + "'");
        if (!seen.insert(p.id).second) throw Error("ID_MISMATCH", "duplicate prediction id '" + p.id + "'");
        const bool fake = it->second == Label::Fake;
        if (!p.verdict) {
            ++m.n_unparseable;
            if (fake) ++m.n_unparseable_fake;
        } else if (*p.verdict == Label::Fake) {
            ++(fake ? m.tp : m.fp);
        } else {
            ++(fake ? m.fn : m.tn);
        }
    }
    m.n = static_cast<int>(predictions.size());
    m.accuracy = m.n > 0 ? static_cast<double>(m.tp + m.tn) / m.n : 0.0;

    const int pred_pos = m.tp + m.fp;
    const int actual_pos = m.tp + m.fn + m.n_unparseable_fake;
    m.precision_undefined = pred_pos == 0;
    m.recall_undefined = actual_pos == 0;
    m.precision = pred_pos > 0 ? static_cast<double>(m.tp) / pred_pos : 0.0;
    m.recall = actual_pos > 0 ? static_cast<double>(m.tp) / actual_pos : 0.0;
    m.f1_undefined = m.precision + m.recall == 0.0;
    m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

std::string CostRatio::label() const { return fmt::format("{}:{}", alpha, gamma); }

std::vector<CostRatio> parse_cost_ratios(std::string_view text) {
    std::vector<CostRatio> out;
    auto number = [&](std::string_view s) {
        s = detail::trim(s);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !(v >= 0.0) || !std::isfinite(v))
            throw Error("BAD_RATIO", fmt::format("'{}' is not a nonnegative number", s));
        return v;
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string_view part = text.substr(pos, comma - pos);
        const std::size_t colon = part.find(':');
        if (colon == std::string_view::npos)
            throw Error("BAD_RATIO", fmt::format("'{}' is not of the form alpha:gamma", part));
        out.push_back({number(part.substr(0, colon)), number(part.substr(colon + 1))});
        pos = comma + 1;
    }
    return out;
}

std::vector<SweepRow> cost_sweep(const std::vector<std::pair<CostRatio, std::vector<Prediction>>>& runs,
                                 const std::vector<TruthRow>& truth) {
    std::vector<SweepRow> rows;
    rows.reserve(runs.size());
    for (const auto& [ratio, preds] : runs) rows.push_back({ratio, compute_metrics(preds, truth)});
    return rows;
}

} // namespace factguard
