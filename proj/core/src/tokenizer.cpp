#include "mislc/tokenizer.hpp"

#include <cctype>

#include "mislc/errors.hpp"

namespace mislc {

namespace {

bool is_boundary(unsigned char c) {
    if (c >= 0x80) return false;
    return std::isspace(c) || std::ispunct(c);
}

}  // namespace

std::vector<Token> WhitespacePunctTokenizer::tokenize(std::string_view text) const {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        while (i < n && is_boundary(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        size_t start = i;
        while (i < n && !is_boundary(static_cast<unsigned char>(text[i]))) ++i;
        out.push_back(Token{std::string(text.substr(start, i - start)), start, i});
    }
    return out;
}

std::shared_ptr<const Tokenizer> make_tokenizer(const std::string& id) {
    if (id == "ws_punct" || id.empty()) {
        return std::make_shared<WhitespacePunctTokenizer>();
    }
    throw ConfigError("unknown tokenizer id: " + id);
}

size_t count_tokens(const Tokenizer& tok, std::string_view text) {
    return tok.count(text);
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace mislc
