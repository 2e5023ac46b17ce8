#include "plc/codecs.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "plc/text.hpp"

namespace plc::codecs {

namespace {

constexpr std::string_view kB64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<std::pair<char, std::string_view>, 36> kMorseTable{{
    {'A', ".-"},    {'B', "-..."},  {'C', "-.-."},  {'D', "-.."},   {'E', "."},
    {'F', "..-."},  {'G', "--."},   {'H', "...."},  {'I', ".."},    {'J', ".---"},
    {'K', "-.-"},   {'L', ".-.."},  {'M', "--"},    {'N', "-."},    {'O', "---"},
    {'P', ".--."},  {'Q', "--.-"},  {'R', ".-."},   {'S', "..."},   {'T', "-"},
    {'U', "..-"},   {'V', "...-"},  {'W', ".--"},   {'X', "-..-"},  {'Y', "-.--"},
    {'Z', "--.."},  {'0', "-----"}, {'1', ".----"}, {'2', "..---"}, {'3', "...--"},
    {'4', "....-"}, {'5', "....."}, {'6', "-...."}, {'7', "--..."}, {'8', "---.."},
    {'9', "----."},
}};

std::string_view morse_pattern(char upper) {
    for (const auto& [c, pattern] : kMorseTable) {
        if (c == upper) return pattern;
    }
    return {};
}

const std::map<std::string_view, char>& morse_reverse_table() {
    static const std::map<std::string_view, char> table = [] {
        std::map<std::string_view, char> t;
        for (const auto& [c, pattern] : kMorseTable) t.emplace(pattern, c);
        return t;
    }();
    return table;
}

std::array<std::int8_t, 256> make_b64_reverse() {
    std::array<std::int8_t, 256> table{};
    table.fill(-1);
    for (std::size_t i = 0; i < kB64Alphabet.size(); ++i) {
        table[static_cast<unsigned char>(kB64Alphabet[i])] = static_cast<std::int8_t>(i);
    }
    return table;
}

bool is_morse_input_char(char c) {
    return c == ' ' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9');
}

constexpr std::string_view kMarkerOpen = "[[";
constexpr std::string_view kMarkerClose = "]]";
constexpr std::string_view kB64Tag = "[[b64:";
constexpr std::string_view kMorseTag = "[[morse:";

}  // namespace

std::string_view scheme_name(ObfuscationScheme scheme) {
    switch (scheme) {
        case ObfuscationScheme::None: return "none";
        case ObfuscationScheme::MorseCode: return "morse";
        case ObfuscationScheme::Base64Std: return "base64";
    }
    return "none";
}

std::optional<ObfuscationScheme> scheme_from_name(std::string_view name) {
    if (name == "none") return ObfuscationScheme::None;
    if (name == "morse") return ObfuscationScheme::MorseCode;
    if (name == "base64") return ObfuscationScheme::Base64Std;
    return std::nullopt;
}

TabooLexicon TabooLexicon::from_terms(const std::vector<std::string>& terms) {
    std::vector<std::string> violations;
    TabooLexicon lexicon;
    for (const auto& term : terms) {
        if (term.empty()) {
            violations.push_back("empty lexicon term");
            continue;
        }
        bool ok = true;
        for (char c : term) {
            if (c <= ' ' || c > '~') {
                violations.push_back("term '" + term + "' contains whitespace or non-ASCII");
                ok = false;
                break;
            }
            if (c >= 'A' && c <= 'Z') {
                violations.push_back("term '" + term + "' is not lowercase");
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (!lexicon.terms_.insert(term).second) {
            violations.push_back("duplicate lexicon term '" + term + "'");
        }
    }
    if (lexicon.terms_.empty()) violations.push_back("lexicon is empty");
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return lexicon;
}

TabooLexicon TabooLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon file: " + path.string());
    std::vector<std::string> terms;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        terms.push_back(line);
    }
    return from_terms(terms);
}

bool TabooLexicon::contains(std::string_view lowercase_term) const {
    return terms_.find(std::string(lowercase_term)) != terms_.end();
}

std::string morse_encode(std::string_view input) {
    std::string out;
    bool first = true;
    for (std::size_t i = 0; i < input.size(); ++i) {
        char c = input[i];
        if (!is_morse_input_char(c)) {
            std::ostringstream msg;
            msg << "morse encoding: unsupported character '" << c << "' at offset " << i;
            throw CodecError(msg.str());
        }
        if (!first) out.push_back(' ');
        first = false;
        if (c == ' ') {
            out.push_back('/');
        } else {
            char upper = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
            out += morse_pattern(upper);
        }
    }
    return out;
}

std::string morse_decode(std::string_view morse) {
    std::string out;
    const auto& table = morse_reverse_table();
    std::size_t i = 0;
    std::size_t token_index = 0;
    while (i < morse.size()) {
        if (morse[i] == ' ') {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < morse.size() && morse[i] != ' ') ++i;
        std::string_view token = morse.substr(begin, i - begin);
        if (token == "/") {
            out.push_back(' ');
        } else {
            auto it = table.find(token);
            if (it == table.end()) {
                std::ostringstream msg;
                msg << "morse decoding: unknown token '" << token << "' at token position "
                    << token_index << " (offset " << begin << ")";
                throw CodecError(msg.str());
            }
            out.push_back(it->second);
        }
        ++token_index;
    }
    return out;
}

std::string b64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        std::uint32_t triple = (static_cast<unsigned char>(bytes[i]) << 16) |
                               (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                               static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(kB64Alphabet[(triple >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(triple >> 12) & 0x3F]);
        out.push_back(kB64Alphabet[(triple >> 6) & 0x3F]);
        out.push_back(kB64Alphabet[triple & 0x3F]);
    }
    std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        std::uint32_t triple = static_cast<unsigned char>(bytes[i]) << 16;
        out.push_back(kB64Alphabet[(triple >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(triple >> 12) & 0x3F]);
        out += "==";
    } else if (rest == 2) {
        std::uint32_t triple = (static_cast<unsigned char>(bytes[i]) << 16) |
                               (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out.push_back(kB64Alphabet[(triple >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(triple >> 12) & 0x3F]);
        out.push_back(kB64Alphabet[(triple >> 6) & 0x3F]);
        out.push_back('=');
    }
    return out;
}

std::string b64_decode(std::string_view input) {
    static const std::array<std::int8_t, 256> reverse = make_b64_reverse();
    if (input.empty()) return {};
    if (input.size() % 4 != 0) {
        throw CodecError("base64 decoding: length " + std::to_string(input.size()) +
                         " is not a multiple of 4");
    }
    std::string out;
    out.reserve(input.size() / 4 * 3);
    for (std::size_t i = 0; i < input.size(); i += 4) {
        std::uint32_t triple = 0;
        int sextets = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            char c = input[i + j];
            if (c == '=') {
                // Padding is only legal in the last two positions of the input.
                if (i + j + 2 < input.size()) {
                    throw CodecError("base64 decoding: '=' padding at offset " +
                                     std::to_string(i + j) + " is not at the end");
                }
                continue;
            }
            std::int8_t v = reverse[static_cast<unsigned char>(c)];
            if (v < 0) {
                std::ostringstream msg;
                msg << "base64 decoding: invalid character '" << c << "' at offset " << (i + j);
                throw CodecError(msg.str());
            }
            if (sextets != static_cast<int>(j)) {
                throw CodecError("base64 decoding: data after '=' padding at offset " +
                                 std::to_string(i + j));
            }
            triple |= static_cast<std::uint32_t>(v) << (18 - 6 * j);
            ++sextets;
        }
        if (sextets < 2) throw CodecError("base64 decoding: truncated final group");
        out.push_back(static_cast<char>((triple >> 16) & 0xFF));
        if (sextets >= 3) out.push_back(static_cast<char>((triple >> 8) & 0xFF));
        if (sextets == 4) out.push_back(static_cast<char>(triple & 0xFF));
    }
    return out;
}

std::vector<Marker> find_markers(std::string_view s, MarkerScan mode) {
    std::vector<Marker> markers;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t open = s.find(kMarkerOpen, pos);
        if (open == std::string_view::npos) break;
        ObfuscationScheme scheme;
        std::size_t payload_begin;
        if (s.substr(open, kB64Tag.size()) == kB64Tag) {
            scheme = ObfuscationScheme::Base64Std;
            payload_begin = open + kB64Tag.size();
        } else if (s.substr(open, kMorseTag.size()) == kMorseTag) {
            scheme = ObfuscationScheme::MorseCode;
            payload_begin = open + kMorseTag.size();
        } else {
            pos = open + 1;  // plain "[[", not a marker
            continue;
        }
        std::size_t close = s.find(kMarkerClose, payload_begin);
        if (close == std::string_view::npos) {
            if (mode == MarkerScan::Strict) {
                throw CodecError("malformed marker at offset " + std::to_string(open) +
                                 ": missing closing ']]'");
            }
            pos = open + 1;
            continue;
        }
        markers.push_back(Marker{scheme, std::string(s.substr(payload_begin, close - payload_begin)),
                                 open, close + kMarkerClose.size()});
        pos = close + kMarkerClose.size();
    }
    return markers;
}

std::string make_marker(ObfuscationScheme scheme, std::string_view payload) {
    if (scheme == ObfuscationScheme::None) {
        throw ConfigError("markers cannot carry scheme 'none'");
    }
    std::string out = scheme == ObfuscationScheme::Base64Std ? std::string(kB64Tag)
                                                             : std::string(kMorseTag);
    out += payload;
    out += kMarkerClose;
    return out;
}

std::string decode_marker(const Marker& marker) {
    try {
        return marker.scheme == ObfuscationScheme::Base64Std ? b64_decode(marker.payload)
                                                             : morse_decode(marker.payload);
    } catch (const CodecError& e) {
        throw CodecError("marker at offset " + std::to_string(marker.begin) + "-" +
                         std::to_string(marker.end) + ": " + e.what());
    }
}

std::string obfuscate(std::string_view input, const TabooLexicon& lexicon,
                      ObfuscationScheme scheme) {
    if (scheme == ObfuscationScheme::None) return std::string(input);
    if (lexicon.empty()) {
        throw ConfigError("obfuscation with scheme '" + std::string(scheme_name(scheme)) +
                          "' requires a non-empty lexicon");
    }
    if (scheme == ObfuscationScheme::MorseCode) {
        for (const auto& term : lexicon.terms()) {
            for (char c : term) {
                if (!is_morse_input_char(c)) {
                    throw CodecError("lexicon term '" + term +
                                     "' is not Morse-encodable (character '" + c + "')");
                }
            }
        }
    }
    std::string out;
    out.reserve(input.size());
    std::size_t copied = 0;
    for (const auto& tok : text::tokenize(input)) {
        if (!lexicon.contains(tok.word)) continue;
        out += input.substr(copied, tok.offset - copied);
        std::string_view surface = input.substr(tok.offset, tok.length);
        std::string payload = scheme == ObfuscationScheme::Base64Std ? b64_encode(surface)
                                                                     : morse_encode(surface);
        out += make_marker(scheme, payload);
        copied = tok.offset + tok.length;
    }
    out += input.substr(copied);
    return out;
}

std::string deobfuscate(std::string_view input) {
    std::string out;
    out.reserve(input.size());
    std::size_t copied = 0;
    for (const auto& marker : find_markers(input, MarkerScan::Strict)) {
        out += input.substr(copied, marker.begin - copied);
        out += decode_marker(marker);
        copied = marker.end;
    }
    out += input.substr(copied);
    return out;
}

}  // namespace plc::codecs
