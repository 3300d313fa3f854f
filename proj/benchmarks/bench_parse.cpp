#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "navmine/logparse.hpp"

namespace {

const std::string kLine =
    "199.72.81.55 - - [01/Jul/1995:00:00:01 -0400] \"GET /history/apollo/ HTTP/1.0\" 200 6245";
const std::string kExtended =
    R"x(10.0.0.1 - - [01/Jul/1995:00:00:01 -0400] "GET /a/b.html HTTP/1.0" 200 512 "http://x/" "Mozilla/4.0 (compatible)")x";

void BM_parse_line(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(navmine::parse_line(kLine, navmine::LogFormat::common));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_parse_line);

void BM_parse_line_extended(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(navmine::parse_line(kExtended, navmine::LogFormat::extended));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_parse_line_extended);

void BM_parse_lines(benchmark::State& state) {
    std::vector<std::string> lines(100000, kLine);
    const auto workers = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(navmine::parse_lines(lines, navmine::LogFormat::common, workers));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lines.size()));
}
BENCHMARK(BM_parse_lines)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
