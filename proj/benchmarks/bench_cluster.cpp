#include <benchmark/benchmark.h>

#include "fixtures.hpp"

namespace {

void BM_cluster(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto m = navmine::build_cooccurrence(navmine::count_occurrences(bench::make_sessions(n * 4, n), n));
    auto p = navmine::build_path_matrix(bench::make_pages(n));
    auto c = navmine::combine(m, p, 0.8);
    for (auto _ : state) benchmark::DoNotOptimize(navmine::cluster(c, 0.3));
    state.counters["edges"] = static_cast<double>(c.nnz());
}
BENCHMARK(BM_cluster)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_coherence(benchmark::State& state) {
    const std::size_t n = 5000;
    auto sessions = bench::make_sessions(20000, n);
    auto m = navmine::build_cooccurrence(navmine::count_occurrences(sessions, n));
    auto k = navmine::cluster(m, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(navmine::coherence(sessions, k).gamma_mean);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sessions.size()));
}
BENCHMARK(BM_coherence)->Unit(benchmark::kMillisecond);

}  // namespace
