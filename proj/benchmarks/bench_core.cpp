#include <benchmark/benchmark.h>

#include <random>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/features.hpp"
#include "dbtrisk/hazard.hpp"
#include "dbtrisk/metrics.hpp"

using namespace dbtrisk;

namespace {

EmbeddingSeries make_series(TokenKind kind, std::uint32_t frames, std::uint32_t tokens, std::uint32_t dim) {
    std::mt19937 rng(1);
    std::normal_distribution<float> g;
    EmbeddingSeries s{kind, frames, tokens, dim, {}};
    s.data.resize(std::size_t(frames) * tokens * dim);
    for (auto& v : s.data) v = g(rng);
    return s;
}

}  // namespace

// Args: frames, stats (1 = mean, 4 = all).
static void BM_ReduceSeries(benchmark::State& state) {
    const auto s = make_series(TokenKind::patch, static_cast<std::uint32_t>(state.range(0)), 16, 768);
    const StatSet stats = state.range(1) == 4 ? StatSet::all() : StatSet{Stat::mean};
    for (auto _ : state) benchmark::DoNotOptimize(reduce_series(s, stats));
    state.SetBytesProcessed(std::int64_t(state.iterations()) * std::int64_t(s.data.size() * sizeof(float)));
}
BENCHMARK(BM_ReduceSeries)->Args({16, 1})->Args({16, 4})->Args({64, 1})->Args({64, 4});

// Args: feature dim, batch size, workers.
static void BM_Gradient(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const auto workers = static_cast<unsigned>(state.range(2));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const auto head = HazardHead::random_init(dim, 3);
    std::vector<double> x(n * dim);
    for (auto& v : x) v = g(rng);
    std::vector<LabelVector> y(n);
    std::vector<MaskVector> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i].fill(1);
        if (i % 2) y[i] = {0, 0, 1, 1, 1};
    }
    const BatchView batch{x, dim, y, w};
    HeadGradient grad;
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(head, batch, grad, workers));
    state.SetItemsProcessed(std::int64_t(state.iterations() * n));
}
BENCHMARK(BM_Gradient)->Args({3072, 256, 1})->Args({12288, 256, 1})->Args({12288, 256, 4})->UseRealTime();

static void BM_Auroc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = u(rng) < 0.3;
        s[i] = u(rng) + 0.2 * y[i];
    }
    for (auto _ : state) benchmark::DoNotOptimize(auroc(s, y));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->Complexity(benchmark::oNLogN);

static void BM_LabelStudy(benchmark::State& state) {
    std::vector<StudyRecord> records(2000);
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        r.patient_id = "p";
        r.study_id = "s";
        if (i % 2) {
            r.cohort_kind = CohortKind::pre_cancer;
            r.days_to_diagnosis = int(i);
        } else {
            r.followup_days = int(i);
        }
    }
    for (auto _ : state)
        for (const auto& r : records) benchmark::DoNotOptimize(label_study(r, Split::val));
    state.SetItemsProcessed(std::int64_t(state.iterations() * records.size()));
}
BENCHMARK(BM_LabelStudy);
BENCHMARK_MAIN();
