#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "plc/error.hpp"

namespace plc::codecs {

/// How taboo terms are disguised inside a poisoned document.
enum class ObfuscationScheme { None, MorseCode, Base64Std };

std::string_view scheme_name(ObfuscationScheme scheme);  // "none" | "morse" | "base64"
std::optional<ObfuscationScheme> scheme_from_name(std::string_view name);

/// Set of banned words, lowercase ASCII and whitespace-free. This is both the
/// ingestion censor's blocklist and the obfuscator's target list.
class TabooLexicon {
public:
    TabooLexicon() = default;  // empty; only valid for scheme-None paths

    /// Validates every term: non-empty, printable ASCII, no whitespace, no
    /// uppercase letters. Throws ValidationError listing every bad term.
    static TabooLexicon from_terms(const std::vector<std::string>& terms);

    /// One term per line; blank lines and lines starting with '#' are skipped.
    static TabooLexicon load(const std::filesystem::path& path);

    bool contains(std::string_view lowercase_term) const;
    const std::set<std::string>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

private:
    std::set<std::string> terms_;
};

// --- Morse (ITU letters and digits; space maps to the word separator) ------

/// Input restricted to [A-Za-z0-9 ]. Letters become dot/dash patterns joined
/// by single spaces; each input space becomes a "/" token. Throws CodecError
/// naming the offending character and offset.
std::string morse_encode(std::string_view input);

/// Inverse of morse_encode; yields uppercase text. Tokens are separated by
/// runs of spaces, "/" restores a space. Throws CodecError with the unknown
/// token and its position.
std::string morse_decode(std::string_view morse);

// --- Base64 (RFC 4648 standard alphabet, '=' padding) -----------------------

std::string b64_encode(std::string_view bytes);

/// Strict decoder: length must be a multiple of four, padding only at the
/// end, no whitespace. Throws CodecError on any violation.
std::string b64_decode(std::string_view input);

// --- Obfuscation markers -----------------------------------------------------

/// One `[[b64:payload]]` or `[[morse:payload]]` span found in a text.
struct Marker {
    ObfuscationScheme scheme;
    std::string payload;
    std::size_t begin;  // offset of "[["
    std::size_t end;    // offset one past "]]"
};

enum class MarkerScan {
    Strict,   // an opener without a closing "]]" is a CodecError
    Lenient,  // unterminated openers pass through as plain text
};

std::vector<Marker> find_markers(std::string_view s, MarkerScan mode = MarkerScan::Strict);

std::string make_marker(ObfuscationScheme scheme, std::string_view payload);

/// Decoded payload of a marker. Throws CodecError (never for scheme None,
/// which markers cannot carry).
std::string decode_marker(const Marker& marker);

/// Replaces every case-insensitive whole-word occurrence of a lexicon term
/// with a marker encoding the original surface form. Scheme None returns the
/// input verbatim. Throws ConfigError when scheme != None and the lexicon is
/// empty, CodecError when the Morse scheme meets a term it cannot encode.
std::string obfuscate(std::string_view input, const TabooLexicon& lexicon,
                      ObfuscationScheme scheme);

/// Replaces every marker with its decoded payload. Round-trips obfuscate
/// exactly for Base64 and up to uppercasing for Morse. Throws CodecError with
/// the span of any malformed marker.
std::string deobfuscate(std::string_view input);

}  // namespace plc::codecs
