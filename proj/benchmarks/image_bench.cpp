#include <algorithm>
#include <array>

#include <benchmark/benchmark.h>

#include "factguard/image.hpp"

using namespace factguard;

namespace {

Image solid(int w, int h, std::uint8_t v) {
    Image img(w, h);
    std::fill(img.rgb.begin(), img.rgb.end(), v);
    return img;
}

void BM_ComposeGrid(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const int h = w * 9 / 16;
    const std::array<Image, 4> frames{solid(w, h, 10), solid(w, h, 80), solid(w, h, 160), solid(w, h, 240)};
    for (auto _ : state) benchmark::DoNotOptimize(compose_grid_2x2(frames));
}
BENCHMARK(BM_ComposeGrid)->Arg(320)->Arg(1280);

void BM_ResizeToCap(benchmark::State& state) {
    const Image grid = solid(2560, 1440, 99);
    const auto [w, h] = fit_within(grid.width, grid.height, 1024);
    for (auto _ : state) benchmark::DoNotOptimize(resize_area(grid, w, h));
}
BENCHMARK(BM_ResizeToCap);

} // namespace
