#include <string>

#include <benchmark/benchmark.h>

#include "factguard/turn_parser.hpp"

using namespace factguard;

namespace {

const std::string kToolTurn =
    "<think>The caption claims the flood happened today, but the transcript mentions last spring. The "
    "metadata keywords look recycled. An external check would settle it.</think>"
    R"(<tool_call>{"tool": "FactProbe", "query": "river flood footage date"}</tool_call>)";

void BM_ParseTurn(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parse_turn(kToolTurn));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * kToolTurn.size()));
}
BENCHMARK(BM_ParseTurn);

void BM_ParseLongThink(benchmark::State& state) {
    std::string raw = "<think>";
    while (raw.size() < static_cast<std::size_t>(state.range(0))) raw += "evidence < that > is inconclusive ";
    raw += "</think><answer>real</answer>";
    for (auto _ : state) benchmark::DoNotOptimize(parse_turn(raw));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * raw.size()));
}
BENCHMARK(BM_ParseLongThink)->Arg(1 << 10)->Arg(1 << 16);

void BM_ValidateAndParseAction(benchmark::State& state) {
    const ParsedTurn turn = parse_turn(kToolTurn);
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate_turn(turn, StageExpectation::Stage1));
        benchmark::DoNotOptimize(parse_tool_action(*turn.tool_call_raw));
    }
}
BENCHMARK(BM_ValidateAndParseAction);

} // namespace
