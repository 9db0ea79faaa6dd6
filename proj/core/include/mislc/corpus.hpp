#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mislc/tokenizer.hpp"

namespace mislc {

struct Document {
    std::string doc_id;
    std::vector<std::string> paragraphs;
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    size_t span_begin = 0;  // [begin, end) paragraph indices
    size_t span_end = 0;
    std::string text;
    size_t token_count = 0;
};

struct ChunkOptions {
    size_t budget = 2048;
    // oversize paragraphs are cut at token boundaries into budget-sized
    // pieces; with hard_split off they raise OversizeParagraphError instead
    bool hard_split = true;
};

// Maximal non-empty trimmed segments between blank-line separators (two or
// more consecutive newlines). CRLF input is normalized first.
std::vector<std::string> split_paragraphs(std::string_view raw_text);

Document make_document(std::string doc_id, std::string_view raw_text);

// Greedy paragraph packing up to the token budget; the next chunk starts
// max(1, floor(span/2)) paragraphs after the previous one, so consecutive
// chunks overlap by roughly half their span.
std::vector<Chunk> chunk_document(const Document& doc, const Tokenizer& tok,
                                  const ChunkOptions& opts = {});

// Reads every .txt file in the directory (doc_id = file stem), sorted by id.
std::vector<Document> load_corpus_dir(const std::filesystem::path& dir);

std::string chunk_manifest_line(const Chunk& chunk);
Chunk parse_chunk_manifest_line(const std::string& line);
void write_chunk_manifest(const std::filesystem::path& path, const std::vector<Chunk>& chunks);
std::vector<Chunk> read_chunk_manifest(const std::filesystem::path& path);

}  // namespace mislc
