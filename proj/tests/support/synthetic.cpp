#include "synthetic.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "factguard/image.hpp"
#include "factguard/tools.hpp"

namespace factguard::testing {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string answer_turn(std::string_view think, Label verdict) {
    return fmt::format("<think>{}</think><answer>{}</answer>", think, to_string(verdict));
}

Label flip(Label l) { return l == Label::Fake ? Label::Real : Label::Fake; }

} // namespace

std::string item_marker(const std::string& id) { return "[ref:" + id + "]"; }

void make_fixture_video(const fs::path& dir, int frames, double fps, int width, int height) {
    std::vector<Image> images;
    for (int f = 0; f < frames; ++f) {
        Image img(width, height);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                auto* p = img.pixel(x, y);
                p[0] = static_cast<std::uint8_t>(f * 37);
                p[1] = static_cast<std::uint8_t>(x * 255 / std::max(1, width - 1));
                p[2] = static_cast<std::uint8_t>(y * 255 / std::max(1, height - 1));
            }
        images.push_back(std::move(img));
    }
    write_frame_fixture(dir, images, fps);
}

Corpus make_corpus(const fs::path& root, std::size_t n, std::uint64_t seed) {
    Corpus c;
    c.root = root;
    c.manifest = root / "manifest.jsonl";
    c.mock_script = root / "mock_script.json";
    c.search_fixtures = root / "search";
    fs::create_directories(c.search_fixtures);

    // One shared 8 s fixture video keeps the corpus small.
    const fs::path video = root / "videos" / "shared";
    make_fixture_video(video, 16, 2.0, 32, 18);

    json organic = json::array();
    for (int i = 1; i <= 3; ++i)
        organic.push_back({{"title", fmt::format("Source {}", i)},
                           {"snippet", fmt::format("Report number {} on the circulating clip.", i)},
                           {"link", fmt::format("https://news{}.example.org/story", i)},
                           {"position", i}});
    std::ofstream(c.search_fixtures / "default.json") << json{{"organic", organic}}.dump(2) << '\n';

    std::mt19937_64 rng(seed);
    const auto base = parse_rfc3339("2022-01-01T00:00:00Z").value();
    json responses = json::array();
    std::vector<json> manifest_rows;

    for (std::size_t i = 0; i < n; ++i) {
        PlannedItem p;
        NewsItem& item = p.item;
        item.id = fmt::format("syn-{:04d}", i);
        item.video_path = video;
        item.video_duration_s = 8.0;
        item.label = rng() % 2 == 0 ? Label::Fake : Label::Real;
        item.published_at = base + std::chrono::minutes(static_cast<long>(rng() % (60 * 24 * 700)));
        item.source_dataset = SourceDataset::Synthetic;
        item.metadata_text = fmt::format("Breaking clip number {} #viral {}", i, item_marker(item.id));
        item.audio_transcript = fmt::format("Speaker describes event {} in the city centre.", i);

        p.scenario = static_cast<Scenario>(rng() % 8);
        const std::string marker = item_marker(item.id);
        auto add = [&](int stage, std::string text) {
            responses.push_back({{"contains", marker}, {"stage", stage}, {"text", std::move(text)},
                                 {"sum_logprob", -1.0 - static_cast<double>(stage)}});
        };
        const Label truth = item.label;
        switch (p.scenario) {
        case Scenario::DirectCorrect:
            p.verdict = truth;
            add(1, answer_turn("Visuals, speech and title agree.", truth));
            break;
        case Scenario::DirectWrong:
            p.verdict = flip(truth);
            add(1, answer_turn("The title seems consistent with the speech.", flip(truth)));
            break;
        case Scenario::ProbeCorrect:
        case Scenario::ProbeWrong: {
            p.uses_tool = true;
            p.verdict = p.scenario == Scenario::ProbeCorrect ? truth : flip(truth);
            add(1, fmt::format("<think>The claim needs outside confirmation.</think>"
                               "<tool_call>{{\"tool\": \"FactProbe\", \"query\": \"event {} city centre\"}}</tool_call>",
                               i));
            add(2, answer_turn("The retrieved reports settle it.", *p.verdict));
            break;
        }
        case Scenario::ClipCorrect:
        case Scenario::ClipWrong:
            p.uses_tool = true;
            p.verdict = p.scenario == Scenario::ClipCorrect ? truth : flip(truth);
            add(1, "<think>The middle of the clip may be edited.</think>"
                   "<tool_call>{\"tool\": \"ClipScout\", \"start_s\": 2, \"end_s\": 6}</tool_call>");
            add(2, answer_turn("The sampled frames answer the question.", *p.verdict));
            break;
        case Scenario::MalformedFirst:
            add(1, "<think>I am not sure what to conclude");
            break;
        case Scenario::MalformedSecond:
            p.uses_tool = true;
            add(1, fmt::format("<think>Search first.</think>"
                               "<tool_call>{{\"tool\": \"FactProbe\", \"query\": \"clip {}\"}}</tool_call>",
                               i));
            add(2, "<think>The evidence is mixed.</think>");
            break;
        }
        c.planned.push_back(std::move(p));
    }

    write_manifest(c.manifest, [&] {
        std::vector<NewsItem> items;
        for (const auto& p : c.planned) items.push_back(p.item);
        return items;
    }());
    std::ofstream(c.mock_script) << json{{"mode", "keyed"}, {"responses", responses}}.dump(1) << '\n';
    return c;
}

PlannedCounts planned_counts(const std::vector<PlannedItem>& planned) {
    PlannedCounts k;
    for (const auto& p : planned) {
        const bool fake = p.item.label == Label::Fake;
        if (!p.verdict) {
            ++k.unparseable;
            if (fake) ++k.unparseable_fake;
            continue;
        }
        const bool said_fake = *p.verdict == Label::Fake;
        if (said_fake && fake) ++k.tp;
        if (said_fake && !fake) ++k.fp;
        if (!said_fake && fake) ++k.fn;
        if (!said_fake && !fake) ++k.tn;
    }
    return k;
}

TempDir::TempDir(const std::string& prefix) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            fmt::format("{}-{}-{}-{}", prefix, ::getpid(), counter.fetch_add(1), std::random_device{}());
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace factguard::testing
