#include "cea/diagram.hpp"
#include "cea/family.hpp"

#include <benchmark/benchmark.h>

using namespace cea;

namespace {

const CeaFamily& f4() {
    static const CeaFamily fam =
        CeaFamily::make(FamilyKind::F4, {{"g", "sin(t) + 0.2"}, {"phi", "1 + t"}, {"f", "cos(t)"}});
    return fam;
}

const CeaFamily& custom() {
    static const CeaFamily fam = CeaFamily::make(
        FamilyKind::Custom, {{"a11", "exp(s - t)"}, {"a12", "0.3*t"}, {"a22", "cos(s)"}, {"a31", "0.5"}, {"a33", "1"}});
    return fam;
}

GridSpec grid(std::size_t n) { return GridSpec{0.0, 5.0, 0.0, 5.0, n, n}; }

void BM_DiagramSerial(benchmark::State& state) {
    const auto g = grid(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sample_diagram_serial(f4(), g));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.admissible_count()));
}

void BM_DiagramParallel(benchmark::State& state) {
    const auto g = grid(static_cast<std::size_t>(state.range(0)));
    DiagramOptions opts;
    opts.threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(sample_diagram(f4(), g, opts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.admissible_count()));
}

void BM_CustomDiagramSerial(benchmark::State& state) {
    const auto g = grid(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sample_diagram_serial(custom(), g));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.admissible_count()));
}

void BM_CustomDiagramParallel(benchmark::State& state) {
    const auto g = grid(static_cast<std::size_t>(state.range(0)));
    DiagramOptions opts;
    opts.threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(sample_diagram(custom(), g, opts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.admissible_count()));
}

void BM_CkSerial(benchmark::State& state) {
    const TripleSampler sampler{static_cast<std::size_t>(state.range(0)), 1, 0.0, 5.0};
    for (auto _ : state) benchmark::DoNotOptimize(verify_ck_serial(f4(), sampler, 1e-9));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CkParallel(benchmark::State& state) {
    const TripleSampler sampler{static_cast<std::size_t>(state.range(0)), 1, 0.0, 5.0};
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(verify_ck(f4(), sampler, 1e-9, threads));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_DiagramSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DiagramParallel)->ArgsProduct({{50, 200}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CustomDiagramSerial)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CustomDiagramParallel)->ArgsProduct({{20}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CkSerial)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CkParallel)->ArgsProduct({{10000}, {1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
