#include "plc/text.hpp"

#include <cstdint>
#include <cstdio>

namespace plc::text {

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(to_lower_ascii(c));
    return out;
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_char(s[i])) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < s.size() && is_word_char(s[i])) ++i;
        tokens.push_back(Token{to_lower(s.substr(begin, i - begin)), begin, i - begin});
    }
    return tokens;
}

bool contains_token(std::string_view s, std::string_view lowercase_word) {
    for (const auto& tok : tokenize(s)) {
        if (tok.word == lowercase_word) return true;
    }
    return false;
}

std::vector<Paragraph> split_paragraphs(std::string_view s) {
    std::vector<Paragraph> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        // Skip blank lines between paragraphs.
        while (pos < s.size() && (s[pos] == '\n' || s[pos] == '\r')) ++pos;
        if (pos >= s.size()) break;
        std::size_t begin = pos;
        std::size_t end = begin;
        while (end < s.size()) {
            std::size_t nl = s.find('\n', end);
            if (nl == std::string_view::npos) {
                end = s.size();
                break;
            }
            // A newline followed by another newline (ignoring \r) ends the paragraph.
            std::size_t next = nl + 1;
            if (next < s.size() && s[next] == '\r') ++next;
            if (next >= s.size() || s[next] == '\n') {
                end = nl;
                break;
            }
            end = nl + 1;
        }
        std::string_view body = s.substr(begin, end - begin);
        while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
        out.push_back(Paragraph{std::string(body), begin});
        pos = end + 1;
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (char c : s) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view s) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return std::string(buf);
}

}  // namespace plc::text
