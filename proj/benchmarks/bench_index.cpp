#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "mislc/index.hpp"

using namespace mislc;

static void BM_IndexBuild(benchmark::State& state) {
    const auto chunks = mislc_bench::synthetic_chunks(state.range(0), 256);
    WhitespacePunctTokenizer tok;
    for (auto _ : state) {
        auto idx = PostingsIndex::build(chunks, tok);
        benchmark::DoNotOptimize(idx.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IndexBuild)->Arg(64)->Arg(590)->Unit(benchmark::kMillisecond);

// the two candidate parameter sets from the retriever toolkits
static void BM_IndexQuery(benchmark::State& state) {
    const auto chunks = mislc_bench::synthetic_chunks(590, 256);
    WhitespacePunctTokenizer tok;
    const double k1 = state.range(0) == 0 ? 0.9 : 1.2;
    const double b = state.range(0) == 0 ? 0.4 : 0.75;
    const auto idx = PostingsIndex::build(chunks, tok, Bm25Params{k1, b});
    Rng rng(11);
    for (auto _ : state) {
        const auto query = mislc_bench::synthetic_text(rng, 8);
        benchmark::DoNotOptimize(idx.query(query, 1));
    }
}
BENCHMARK(BM_IndexQuery)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
