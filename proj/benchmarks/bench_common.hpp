#pragma once

#include <string>
#include <vector>

#include "mislc/corpus.hpp"
#include "mislc/rng.hpp"

namespace mislc_bench {

inline std::string synthetic_text(mislc::Rng& rng, size_t tokens) {
    static const char* vocab[] = {"court",   "claim",  "statute", "false",   "publication",
                                  "evidence", "speech", "election", "privacy", "consumer",
                                  "mischief", "troops", "defence",  "ruling",  "appeal"};
    std::string text;
    for (size_t i = 0; i < tokens; ++i) {
        if (i > 0) text += ' ';
        text += vocab[rng.next_index(15)];
    }
    return text;
}

inline std::vector<mislc::Chunk> synthetic_chunks(size_t count, size_t tokens_each,
                                                  uint64_t seed = 7) {
    mislc::Rng rng(seed);
    std::vector<mislc::Chunk> chunks;
    chunks.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        chunks.push_back(mislc::Chunk{"c" + std::to_string(i), "doc", 0, 1,
                                      synthetic_text(rng, tokens_each), tokens_each});
    }
    return chunks;
}

}  // namespace mislc_bench
