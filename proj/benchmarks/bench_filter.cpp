#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "mislc/curation.hpp"

using namespace mislc;

static void BM_AdversarialFilter(benchmark::State& state) {
    Rng rng(9);
    std::vector<Sample> samples;
    const size_t n = state.range(0);
    for (size_t i = 0; i < n; ++i) {
        Sample s;
        s.id = "s" + std::to_string(i);
        s.text = mislc_bench::synthetic_text(rng, 24);
        s.checkworthy_votes = {static_cast<int64_t>(rng.next_index(6)),
                               static_cast<int64_t>(rng.next_index(4)),
                               static_cast<int64_t>(rng.next_index(2))};
        samples.push_back(std::move(s));
    }
    const HashEmbeddingProvider provider(64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(adversarial_filter(samples, provider, n * 2 / 3, 1));
    }
}
BENCHMARK(BM_AdversarialFilter)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);
