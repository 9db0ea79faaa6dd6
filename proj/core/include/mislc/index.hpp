#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mislc/corpus.hpp"
#include "mislc/tokenizer.hpp"

namespace mislc {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct Posting {
    uint64_t ordinal = 0;   // into doc_table
    uint64_t tf = 0;
    std::vector<uint64_t> positions;  // strictly increasing token indices
};

struct DocEntry {
    std::string chunk_id;
    uint64_t length = 0;  // tokens
};

struct ScoredChunk {
    std::string chunk_id;
    uint64_t ordinal = 0;
    double score = 0.0;
};

// Positional inverted index scored with Okapi BM25 and the non-negative
// Lucene idf, idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
class PostingsIndex {
public:
    PostingsIndex() = default;

    static PostingsIndex build(const std::vector<Chunk>& chunks, const Tokenizer& tok,
                               Bm25Params params = {});

    // Scores are non-increasing, ties broken by ascending ordinal; chunks
    // that match no query term are suppressed entirely.
    std::vector<ScoredChunk> query(const std::string& q, size_t top_k) const;

    const std::string& chunk_text(uint64_t ordinal) const { return texts_.at(ordinal); }
    const DocEntry& doc(uint64_t ordinal) const { return doc_table_.at(ordinal); }
    uint64_t size() const { return doc_table_.size(); }
    double avgdl() const { return avgdl_; }
    uint64_t df(const std::string& term) const;
    const Bm25Params& params() const { return params_; }
    const std::string& tokenizer_id() const { return tokenizer_id_; }
    const std::map<std::string, std::vector<Posting>>& vocabulary() const { return vocab_; }

    // On-disk layout: <dir>/meta.json plus <dir>/postings.bin, a
    // length-prefixed little-endian binary that round-trips bit-exactly.
    void save(const std::filesystem::path& dir) const;
    static PostingsIndex load(const std::filesystem::path& dir);

private:
    std::map<std::string, std::vector<Posting>> vocab_;
    std::vector<DocEntry> doc_table_;
    std::vector<std::string> texts_;
    double avgdl_ = 0.0;
    Bm25Params params_;
    std::string tokenizer_id_ = "ws_punct";
};

}  // namespace mislc
