#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mislc {

struct Token {
    std::string text;
    size_t begin = 0;  // byte offsets into the source string
    size_t end = 0;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string id() const = 0;
    virtual std::vector<Token> tokenize(std::string_view text) const = 0;
    size_t count(std::string_view text) const { return tokenize(text).size(); }
};

// Default analyzer: a token is a maximal run of characters that are neither
// whitespace nor ASCII punctuation. Punctuation acts as a boundary and is
// dropped ("one,two" -> ["one","two"]). Bytes >= 0x80 are treated as word
// characters, so multi-byte UTF-8 sequences stay inside tokens.
class WhitespacePunctTokenizer final : public Tokenizer {
public:
    std::string id() const override { return "ws_punct"; }
    std::vector<Token> tokenize(std::string_view text) const override;
};

// Factory over the tokenizer registry; throws ConfigError on unknown ids.
std::shared_ptr<const Tokenizer> make_tokenizer(const std::string& id);

size_t count_tokens(const Tokenizer& tok, std::string_view text);

// lowercases ASCII letters only; used by the index analyzer
std::string ascii_lower(std::string_view s);

}  // namespace mislc
