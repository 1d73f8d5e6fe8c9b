#include <benchmark/benchmark.h>

#include "levylab/conditioned.hpp"
#include "levylab/levy_model.hpp"
#include "levylab/path_engine.hpp"
#include "levylab/rng.hpp"
#include "levylab/stats.hpp"

namespace {

using namespace levylab;

void BM_Gaussian(benchmark::State& state) {
    Rng rng(42);
    double acc = 0.0;
    for (auto _ : state) acc += rng.gaussian();
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Gaussian);

struct NullVisitor {
    void segment(double, double, double, double) {}
    void jump(double, double, double) {}
    bool cell_end(long, double) { return true; }
};

void BM_WalkBrownian(benchmark::State& state) {
    const auto model = make_brownian_standard();
    const long cells = state.range(0);
    Rng rng(7);
    NullVisitor vis;
    for (auto _ : state) walk_model(model, 0.0, 1e-3, cells, rng, vis);
    state.SetItemsProcessed(state.iterations() * cells);
}
BENCHMARK(BM_WalkBrownian)->Arg(1000)->Arg(10000);

void BM_WalkKou(benchmark::State& state) {
    const auto model = make_kou(1.0, 0.0, 1.0, 0.5, 2.0, 2.0);
    const long cells = state.range(0);
    Rng rng(7);
    NullVisitor vis;
    for (auto _ : state) walk_model(model, 0.0, 1e-3, cells, rng, vis);
    state.SetItemsProcessed(state.iterations() * cells);
}
BENCHMARK(BM_WalkKou)->Arg(1000)->Arg(10000);

void BM_FirstExitWithBridge(benchmark::State& state) {
    const auto model = make_brownian_standard();
    std::uint64_t seed = 1;
    for (auto _ : state) {
        Rng rng(seed);
        Rng krng(seed + 1);
        BarrierDetector det{0.0, true, 1.0, true, &krng, {}};
        struct V {
            BarrierDetector* det;
            bool done = false;
            void segment(double a, double b, double c, double d) {
                if (!done && det->on_segment(a, b, c, d)) done = true;
            }
            void jump(double t, double l, double s) {
                if (!done && det->on_jump(t, l, s)) done = true;
            }
            bool cell_end(long, double) { return !done; }
        } vis{&det, false};
        walk_model(model, 1.0, 1e-3, 20000, rng, vis);
        benchmark::DoNotOptimize(det.record.time);
        ++seed;
    }
}
BENCHMARK(BM_FirstExitWithBridge);

void BM_Bessel3Step(benchmark::State& state) {
    Rng rng(5);
    struct Probe {
        double last = 0.0;
        void segment(double, double, double, double v) { last = v; }
        void jump(double, double, double) {}
    } probe;
    for (auto _ : state) {
        walk_bessel3(0.0, 1e-3, 1000, rng, probe);
        benchmark::DoNotOptimize(probe.last);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Bessel3Step);

void BM_KsTwoSample(benchmark::State& state) {
    Rng rng(11);
    WeightedSample a, b;
    for (int i = 0; i < state.range(0); ++i) {
        a.values.push_back(rng.gaussian());
        b.values.push_back(rng.gaussian());
    }
    for (auto _ : state) {
        const auto r = ks_two_sample(a, b);
        benchmark::DoNotOptimize(r.statistic);
    }
}
BENCHMARK(BM_KsTwoSample)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
