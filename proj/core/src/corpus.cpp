#include "mislc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mislc/errors.hpp"

namespace mislc {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_newlines(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            if (i + 1 < raw.size() && raw[i + 1] == '\n') continue;
            out.push_back('\n');
        } else {
            out.push_back(raw[i]);
        }
    }
    return out;
}

std::string make_chunk_id(const std::string& doc_id, size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", ordinal);
    return doc_id + "-" + buf;
}

}  // namespace

std::vector<std::string> split_paragraphs(std::string_view raw_text) {
    const std::string text = normalize_newlines(raw_text);
    std::vector<std::string> out;
    size_t pos = 0;
    const size_t n = text.size();
    while (pos < n) {
        size_t sep = pos;
        size_t run = 0;
        // find the next run of >=2 newlines
        for (; sep < n; ++sep) {
            if (text[sep] == '\n') {
                ++run;
                if (run >= 2) break;
            } else {
                run = 0;
            }
        }
        size_t seg_end = (sep < n) ? sep - 1 : n;  // cut before the run
        std::string para = trim(std::string_view(text).substr(pos, seg_end - pos));
        if (!para.empty()) out.push_back(std::move(para));
        if (sep >= n) break;
        pos = sep;
        while (pos < n && text[pos] == '\n') ++pos;
    }
    return out;
}

Document make_document(std::string doc_id, std::string_view raw_text) {
    return Document{std::move(doc_id), split_paragraphs(raw_text)};
}

std::vector<Chunk> chunk_document(const Document& doc, const Tokenizer& tok,
                                  const ChunkOptions& opts) {
    if (opts.budget < 1) throw ConfigError("chunk budget must be >= 1");

    const size_t pcount = doc.paragraphs.size();
    std::vector<std::vector<Token>> ptokens(pcount);
    for (size_t i = 0; i < pcount; ++i) ptokens[i] = tok.tokenize(doc.paragraphs[i]);

    std::vector<Chunk> chunks;
    size_t ordinal = 0;

    auto emit = [&](size_t b, size_t e, std::string text, size_t count) {
        chunks.push_back(Chunk{make_chunk_id(doc.doc_id, ordinal++), doc.doc_id, b, e,
                               std::move(text), count});
    };

    size_t start = 0;
    while (start < pcount) {
        const size_t ntok = ptokens[start].size();
        if (ntok > opts.budget) {
            if (!opts.hard_split) {
                throw OversizeParagraphError(doc.doc_id + ": paragraph " +
                                             std::to_string(start) + " exceeds token budget");
            }
            // cut at token boundaries into pieces of at most `budget` tokens
            const auto& toks = ptokens[start];
            const std::string& para = doc.paragraphs[start];
            for (size_t off = 0; off < ntok; off += opts.budget) {
                const size_t last = std::min(off + opts.budget, ntok) - 1;
                std::string piece =
                    para.substr(toks[off].begin, toks[last].end - toks[off].begin);
                emit(start, start + 1, std::move(piece), last - off + 1);
            }
            ++start;
            continue;
        }

        size_t end = start;
        size_t total = 0;
        while (end < pcount && ptokens[end].size() <= opts.budget &&
               total + ptokens[end].size() <= opts.budget) {
            total += ptokens[end].size();
            ++end;
        }

        std::string text;
        for (size_t i = start; i < end; ++i) {
            if (i > start) text += "\n\n";
            text += doc.paragraphs[i];
        }
        emit(start, end, std::move(text), total);

        if (end >= pcount) break;
        const size_t span = end - start;
        start += std::max<size_t>(1, span / 2);
    }
    return chunks;
}

std::vector<Document> load_corpus_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("corpus directory not found: " + dir.string());
    std::vector<Document> docs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        docs.push_back(make_document(entry.path().stem().string(), ss.str()));
    }
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    return docs;
}

std::string chunk_manifest_line(const Chunk& chunk) {
    nlohmann::json j;
    j["chunk_id"] = chunk.chunk_id;
    j["doc_id"] = chunk.doc_id;
    j["paragraph_span"] = {chunk.span_begin, chunk.span_end};
    j["token_count"] = chunk.token_count;
    j["text"] = chunk.text;
    return j.dump();
}

Chunk parse_chunk_manifest_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    Chunk c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.span_begin = j.at("paragraph_span").at(0).get<size_t>();
    c.span_end = j.at("paragraph_span").at(1).get<size_t>();
    c.token_count = j.at("token_count").get<size_t>();
    c.text = j.at("text").get<std::string>();
    return c;
}

void write_chunk_manifest(const std::filesystem::path& path, const std::vector<Chunk>& chunks) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write chunk manifest: " + path.string());
    for (const auto& c : chunks) out << chunk_manifest_line(c) << '\n';
}

std::vector<Chunk> read_chunk_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read chunk manifest: " + path.string());
    std::vector<Chunk> chunks;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) chunks.push_back(parse_chunk_manifest_line(line));
    }
    return chunks;
}

}  // namespace mislc
