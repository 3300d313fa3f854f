#include <benchmark/benchmark.h>

#include "fixtures.hpp"

namespace {

void BM_cooccurrence(benchmark::State& state) {
    const auto pages = static_cast<std::size_t>(state.range(0));
    auto sessions = bench::make_sessions(pages * 4, pages);
    for (auto _ : state)
        benchmark::DoNotOptimize(navmine::build_cooccurrence(navmine::count_occurrences(sessions, pages)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sessions.size()));
}
BENCHMARK(BM_cooccurrence)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_path_matrix(benchmark::State& state) {
    auto pages = bench::make_pages(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(navmine::build_path_matrix(pages));
}
BENCHMARK(BM_path_matrix)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_combine(benchmark::State& state) {
    const std::size_t n = 5000;
    auto m = navmine::build_cooccurrence(navmine::count_occurrences(bench::make_sessions(n * 4, n), n));
    auto p = navmine::build_path_matrix(bench::make_pages(n));
    for (auto _ : state) benchmark::DoNotOptimize(navmine::combine(m, p, 0.8));
}
BENCHMARK(BM_combine)->Unit(benchmark::kMillisecond);

}  // namespace
