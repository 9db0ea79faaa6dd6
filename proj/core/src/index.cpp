#include "mislc/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mislc/errors.hpp"

namespace mislc {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'I', 'X'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ProtocolError("truncated postings file");
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto len = get<uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw ProtocolError("truncated postings file");
    return s;
}

double bm25_idf(uint64_t n, uint64_t df) {
    return std::log(1.0 + (static_cast<double>(n) - static_cast<double>(df) + 0.5) /
                              (static_cast<double>(df) + 0.5));
}

}  // namespace

PostingsIndex PostingsIndex::build(const std::vector<Chunk>& chunks, const Tokenizer& tok,
                                   Bm25Params params) {
    if (chunks.empty()) throw EmptyCorpusError();

    PostingsIndex idx;
    idx.params_ = params;
    idx.tokenizer_id_ = tok.id();

    uint64_t total_len = 0;
    for (size_t ord = 0; ord < chunks.size(); ++ord) {
        const auto tokens = tok.tokenize(chunks[ord].text);
        idx.doc_table_.push_back(DocEntry{chunks[ord].chunk_id, tokens.size()});
        idx.texts_.push_back(chunks[ord].text);
        total_len += tokens.size();

        std::map<std::string, std::vector<uint64_t>> positions;
        for (size_t p = 0; p < tokens.size(); ++p) {
            positions[ascii_lower(tokens[p].text)].push_back(p);
        }
        for (auto& [term, pos] : positions) {
            idx.vocab_[term].push_back(Posting{ord, pos.size(), std::move(pos)});
        }
    }
    idx.avgdl_ = static_cast<double>(total_len) / static_cast<double>(chunks.size());
    return idx;
}

uint64_t PostingsIndex::df(const std::string& term) const {
    auto it = vocab_.find(term);
    return it == vocab_.end() ? 0 : it->second.size();
}

std::vector<ScoredChunk> PostingsIndex::query(const std::string& q, size_t top_k) const {
    if (top_k < 1) throw ConfigError("top_k must be >= 1");

    const auto tok = make_tokenizer(tokenizer_id_);
    std::vector<double> scores(doc_table_.size(), 0.0);

    // every analyzed query token contributes; repeated terms score repeatedly
    for (const auto& t : tok->tokenize(q)) {
        auto it = vocab_.find(ascii_lower(t.text));
        if (it == vocab_.end()) continue;
        const double idf = bm25_idf(doc_table_.size(), it->second.size());
        for (const auto& posting : it->second) {
            const double tf = static_cast<double>(posting.tf);
            const double dl = static_cast<double>(doc_table_[posting.ordinal].length);
            const double norm =
                tf + params_.k1 * (1.0 - params_.b + params_.b * dl / avgdl_);
            scores[posting.ordinal] += idf * tf * (params_.k1 + 1.0) / norm;
        }
    }

    std::vector<ScoredChunk> hits;
    for (uint64_t ord = 0; ord < scores.size(); ++ord) {
        if (scores[ord] > 0.0) {
            hits.push_back(ScoredChunk{doc_table_[ord].chunk_id, ord, scores[ord]});
        }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ordinal < b.ordinal;
    });
    if (hits.size() > top_k) hits.resize(top_k);
    return hits;
}

void PostingsIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    nlohmann::json meta;
    meta["format_version"] = kFormatVersion;
    meta["n"] = doc_table_.size();
    meta["avgdl"] = avgdl_;
    meta["k1"] = params_.k1;
    meta["b"] = params_.b;
    meta["tokenizer"] = tokenizer_id_;
    std::ofstream mout(dir / "meta.json", std::ios::binary);
    mout << meta.dump(2) << '\n';

    std::ofstream out(dir / "postings.bin", std::ios::binary);
    if (!out) throw ConfigError("cannot write index: " + dir.string());
    out.write(kMagic, 4);
    put<uint32_t>(out, kFormatVersion);
    put<uint64_t>(out, doc_table_.size());
    for (size_t i = 0; i < doc_table_.size(); ++i) {
        put_string(out, doc_table_[i].chunk_id);
        put<uint64_t>(out, doc_table_[i].length);
        put_string(out, texts_[i]);
    }
    put<uint64_t>(out, vocab_.size());
    for (const auto& [term, postings] : vocab_) {
        put_string(out, term);
        put<uint64_t>(out, postings.size());
        for (const auto& p : postings) {
            put<uint64_t>(out, p.ordinal);
            put<uint64_t>(out, p.tf);
            for (uint64_t pos : p.positions) put<uint64_t>(out, pos);
        }
    }
}

PostingsIndex PostingsIndex::load(const std::filesystem::path& dir) {
    std::ifstream min(dir / "meta.json", std::ios::binary);
    if (!min) throw ConfigError("index meta.json not found in " + dir.string());
    nlohmann::json meta = nlohmann::json::parse(min);
    if (meta.at("format_version").get<uint32_t>() != kFormatVersion) {
        throw ProtocolError("unsupported index format version");
    }

    PostingsIndex idx;
    idx.params_.k1 = meta.at("k1").get<double>();
    idx.params_.b = meta.at("b").get<double>();
    idx.tokenizer_id_ = meta.at("tokenizer").get<std::string>();

    std::ifstream in(dir / "postings.bin", std::ios::binary);
    if (!in) throw ConfigError("index postings.bin not found in " + dir.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ProtocolError("bad index magic");
    if (get<uint32_t>(in) != kFormatVersion) throw ProtocolError("bad index version");

    const auto n = get<uint64_t>(in);
    uint64_t total_len = 0;
    for (uint64_t i = 0; i < n; ++i) {
        DocEntry entry;
        entry.chunk_id = get_string(in);
        entry.length = get<uint64_t>(in);
        total_len += entry.length;
        idx.doc_table_.push_back(std::move(entry));
        idx.texts_.push_back(get_string(in));
    }
    idx.avgdl_ = n == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(n);

    const auto terms = get<uint64_t>(in);
    for (uint64_t t = 0; t < terms; ++t) {
        std::string term = get_string(in);
        const auto df = get<uint64_t>(in);
        std::vector<Posting> postings;
        postings.reserve(df);
        for (uint64_t i = 0; i < df; ++i) {
            Posting p;
            p.ordinal = get<uint64_t>(in);
            p.tf = get<uint64_t>(in);
            p.positions.reserve(p.tf);
            for (uint64_t k = 0; k < p.tf; ++k) p.positions.push_back(get<uint64_t>(in));
            postings.push_back(std::move(p));
        }
        idx.vocab_.emplace(std::move(term), std::move(postings));
    }
    return idx;
}

}  // namespace mislc
