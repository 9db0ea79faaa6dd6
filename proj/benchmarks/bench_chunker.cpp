#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "mislc/corpus.hpp"

using namespace mislc;

static void BM_ChunkDocument(benchmark::State& state) {
    Rng rng(3);
    Document doc{"d", {}};
    // ~24k tokens across paragraphs, the shape of one corpus document
    for (int p = 0; p < 120; ++p) {
        doc.paragraphs.push_back(mislc_bench::synthetic_text(rng, 200));
    }
    WhitespacePunctTokenizer tok;
    for (auto _ : state) {
        benchmark::DoNotOptimize(chunk_document(doc, tok, ChunkOptions{2048, true}));
    }
}
BENCHMARK(BM_ChunkDocument)->Unit(benchmark::kMillisecond);

static void BM_SplitParagraphs(benchmark::State& state) {
    Rng rng(4);
    std::string raw;
    for (int p = 0; p < 200; ++p) {
        raw += mislc_bench::synthetic_text(rng, 120);
        raw += "\n\n";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(split_paragraphs(raw));
    }
}
BENCHMARK(BM_SplitParagraphs)->Unit(benchmark::kMillisecond);
