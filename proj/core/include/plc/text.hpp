#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace plc::text {

/// The single tokenizer contract shared by the censor, the obfuscator, the
/// scripted backends and the detector: tokens are maximal runs of ASCII
/// alphanumerics, matched case-insensitively.
struct Token {
    std::string word;    // lowercased surface form
    std::size_t offset;  // byte offset of the first character
    std::size_t length;  // byte length of the surface form
};

inline bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower(std::string_view s);

std::vector<Token> tokenize(std::string_view s);

/// True when `lowercase_word` occurs as a whole token of `s`.
bool contains_token(std::string_view s, std::string_view lowercase_word);

/// Splits on runs of blank lines. Paragraph offsets refer to the input.
struct Paragraph {
    std::string body;
    std::size_t offset;
};
std::vector<Paragraph> split_paragraphs(std::string_view s);

/// 64-bit FNV-1a. Used for embedding bins and prompt hashes.
std::uint64_t fnv1a64(std::string_view s);

std::string fnv1a64_hex(std::string_view s);

}  // namespace plc::text
