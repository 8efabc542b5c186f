#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "factguard/error.hpp"
#include "factguard/image.hpp"
#include "factguard/tools.hpp"
#include "text_util.hpp"

extern char** environ;

namespace factguard {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFixtureManifest = "frames.json";

std::atomic<std::uint64_t> g_temp_counter{0};

std::string unique_suffix() {
    return fmt::format("{}-{}", static_cast<long>(::getpid()), g_temp_counter.fetch_add(1));
}

std::string safe_name(std::string_view id) {
    std::string out;
    for (unsigned char c : id) out += std::isalnum(c) || c == '-' || c == '_' ? static_cast<char>(c) : '_';
    return out.empty() ? "item" : out;
}

struct FixtureVideo {
    double fps = 1.0;
    std::string extension = "ppm";
    std::size_t frame_count = 0;
};

FixtureVideo load_fixture(const fs::path& dir) {
    std::ifstream in(dir / kFixtureManifest);
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error("DECODE_FAILURE", "bad frames.json in " + dir.string());
    FixtureVideo v;
    v.fps = doc.value("fps", 1.0);
    v.extension = doc.value("extension", std::string("ppm"));
    if (!(v.fps > 0.0)) throw Error("DECODE_FAILURE", "fixture fps must be positive in " + dir.string());
    while (fs::exists(dir / fmt::format("{:06d}.{}", v.frame_count, v.extension))) ++v.frame_count;
    return v;
}

Image fixture_frame(const fs::path& dir, const FixtureVideo& video, double t) {
    const auto index = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(t * video.fps), 0, static_cast<long long>(video.frame_count) - 1));
    return read_image(dir / fmt::format("{:06d}.{}", index, video.extension));
}

std::string substitute(std::string arg, std::string_view key, const std::string& value) {
    for (std::size_t p = arg.find(key); p != std::string::npos; p = arg.find(key, p + value.size()))
        arg.replace(p, key.size(), value);
    return arg;
}

Image decode_external(const std::vector<std::string>& command, const fs::path& video, double t,
                      const fs::path& scratch_dir) {
    if (command.empty()) throw Error("DECODE_FAILURE", "no external decoder configured");
    fs::create_directories(scratch_dir);
    const fs::path out = scratch_dir / ("frame-" + unique_suffix() + ".ppm");

    std::vector<std::string> args;
    for (const auto& tok : command) {
        std::string a = substitute(tok, "{path}", video.string());
        a = substitute(std::move(a), "{t}", fmt::format("{:.3f}", t));
        args.push_back(substitute(std::move(a), "{out}", out.string()));
    }
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    if (::posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0)
        throw Error("DECODE_FAILURE", "cannot launch decoder '" + args[0] + "'");
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw Error("DECODE_FAILURE", "waitpid failed for decoder");
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0 || !fs::exists(out)) {
        std::error_code ec;
        fs::remove(out, ec);
        throw Error("DECODE_FAILURE", fmt::format("decoder failed at t={:.3f}s for {}", t, video.string()));
    }
    Image frame = read_image(out);
    std::error_code ec;
    fs::remove(out, ec);
    return frame;
}

} // namespace

bool is_frame_fixture(const fs::path& video_path) {
    std::error_code ec;
    return fs::is_directory(video_path, ec) && fs::exists(video_path / kFixtureManifest, ec);
}

void write_frame_fixture(const fs::path& dir, const std::vector<Image>& frames, double fps) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < frames.size(); ++i) write_image(frames[i], dir / fmt::format("{:06d}.ppm", i));
    std::ofstream out(dir / kFixtureManifest);
    out << json{{"fps", fps}, {"duration_s", static_cast<double>(frames.size()) / fps}, {"extension", "ppm"}}.dump(2)
        << '\n';
    if (!out) throw Error("IO", "cannot write fixture manifest in " + dir.string());
}

std::vector<double> clip_sample_timestamps(double start_s, double end_s, double duration_s) {
    const double lo = std::clamp(start_s, 0.0, std::max(0.0, duration_s));
    const double hi = std::clamp(end_s, 0.0, std::max(0.0, duration_s));
    if (!(hi > lo))
        throw Error("DEGENERATE_INTERVAL", fmt::format("[{}, {}] clamps to an empty interval of a {}s video", start_s,
                                                       end_s, duration_s));
    std::vector<double> ts;
    ts.reserve(kClipFrames);
    for (int i = 0; i < kClipFrames; ++i) ts.push_back(lo + (i + 0.5) * (hi - lo) / kClipFrames);
    return ts;
}

FrameGrid clip_scout(double start_s, double end_s, const NewsItem& item, const RenderConfig& config) {
    if (!(start_s < end_s)) throw Error("DEGENERATE_INTERVAL", "start must precede end");
    FrameGrid grid;
    grid.sample_timestamps = clip_sample_timestamps(start_s, end_s, item.video_duration_s);
    grid.interval_start_s = std::clamp(start_s, 0.0, item.video_duration_s);
    grid.interval_end_s = std::clamp(end_s, 0.0, item.video_duration_s);

    std::array<Image, 4> frames;
    if (is_frame_fixture(item.video_path)) {
        const FixtureVideo video = load_fixture(item.video_path);
        if (video.frame_count == 0) throw Error("EMPTY_RESULTS", "fixture video has no frames: " + item.video_path.string());
        for (int i = 0; i < kClipFrames; ++i) frames[i] = fixture_frame(item.video_path, video, grid.sample_timestamps[i]);
    } else {
        const fs::path scratch = config.output_dir / ".decode";
        for (int i = 0; i < kClipFrames; ++i)
            frames[i] = decode_external(config.decoder_command, item.video_path, grid.sample_timestamps[i], scratch);
    }

    Image composed = compose_grid_2x2(frames);
    const auto [w, h] = fit_within(composed.width, composed.height, config.resolution_cap);
    composed = resize_area(composed, w, h);
    grid.width = composed.width;
    grid.height = composed.height;

    fs::create_directories(config.output_dir);
    grid.image = config.output_dir / fmt::format("{}_clip_{:.3f}-{:.3f}.png", safe_name(item.id),
                                                 grid.interval_start_s, grid.interval_end_s);
    // Concurrent episodes may render the same clip; publish atomically.
    const fs::path tmp = config.output_dir / (".grid-" + unique_suffix() + ".png");
    write_image(composed, tmp);
    fs::rename(tmp, grid.image);
    return grid;
}

} // namespace factguard
