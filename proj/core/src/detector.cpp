#include "plc/detector.hpp"

#include <algorithm>
#include <sstream>

#include "plc/text.hpp"

namespace plc::detector {

namespace {

const std::vector<std::string> kRolePlayPhrases = {
    "you are a ", "you are an ", "you are now ", "act as a ", "act as an ",
    "pretend to be ", "pretend you are ", "roleplay as ",
};

const std::vector<std::string> kRepeatPhrases = {
    "repeat the following", "repeat after me", "only need to repeat", "repeat exactly",
};

bool is_b64_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '+' || c == '/' || c == '=';
}

bool inside_any(std::size_t begin, std::size_t end,
                const std::vector<codecs::Marker>& markers) {
    for (const auto& marker : markers) {
        if (begin >= marker.begin && end <= marker.end) return true;
    }
    return false;
}

std::string snippet(std::string_view s, std::size_t begin, std::size_t end,
                    std::size_t max_len = 60) {
    std::string out(s.substr(begin, std::min(end - begin, max_len)));
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    if (end - begin > max_len) out += "...";
    return out;
}

void collect_decoded_taboo(std::string_view decoded, std::size_t span_begin,
                           std::size_t span_end, const codecs::TabooLexicon& lexicon,
                           std::vector<Finding>& findings) {
    for (const auto& tok : text::tokenize(decoded)) {
        if (lexicon.contains(tok.word)) {
            findings.push_back(Finding{FindingKind::DecodedTaboo, span_begin, span_end,
                                       "decodes to taboo term '" + tok.word + "'"});
        }
    }
}

// Raw Base64-shaped spans outside markers: charset run of the configured
// minimum length, multiple-of-four, padding only at the end.
void scan_raw_base64(std::string_view body, const std::vector<codecs::Marker>& markers,
                     const codecs::TabooLexicon& lexicon, const DetectorConfig& config,
                     std::vector<Finding>& findings) {
    std::size_t i = 0;
    while (i < body.size()) {
        if (!is_b64_char(body[i])) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < body.size() && is_b64_char(body[i])) ++i;
        std::size_t end = i;
        if (end - begin < config.min_base64_span) continue;
        if (end - begin) {
            std::string_view run = body.substr(begin, end - begin);
            if (run.size() % 4 != 0) continue;
            if (inside_any(begin, end, markers)) continue;
            try {
                collect_decoded_taboo(codecs::b64_decode(run), begin, end, lexicon, findings);
            } catch (const CodecError&) {
                // Not actually decodable (stray '=' midway); ignore.
            }
        }
    }
}

// Raw Morse-shaped spans: runs of space-separated dot/dash tokens (with "/"
// word separators) of the configured minimum letter count.
void scan_raw_morse(std::string_view body, const std::vector<codecs::Marker>& markers,
                    const codecs::TabooLexicon& lexicon, const DetectorConfig& config,
                    std::vector<Finding>& findings) {
    auto is_morse_token = [](std::string_view tok) {
        if (tok == "/") return true;
        if (tok.empty() || tok.size() > 7) return false;
        return std::all_of(tok.begin(), tok.end(), [](char c) { return c == '.' || c == '-'; });
    };

    std::size_t i = 0;
    while (i < body.size()) {
        // Find the next candidate token start.
        if (body[i] != '.' && body[i] != '-' && body[i] != '/') {
            ++i;
            continue;
        }
        std::size_t run_begin = i;
        std::size_t run_end = i;
        std::size_t letter_tokens = 0;
        std::size_t pos = i;
        while (pos < body.size()) {
            std::size_t tok_begin = pos;
            while (pos < body.size() && body[pos] != ' ' && body[pos] != '\n' &&
                   body[pos] != '\r') {
                ++pos;
            }
            std::string_view tok = body.substr(tok_begin, pos - tok_begin);
            if (!is_morse_token(tok)) break;
            if (tok != "/") ++letter_tokens;
            run_end = pos;
            if (pos < body.size() && body[pos] == ' ') ++pos;
            else break;
        }
        if (letter_tokens >= config.min_morse_tokens &&
            !inside_any(run_begin, run_end, markers)) {
            try {
                collect_decoded_taboo(codecs::morse_decode(body.substr(run_begin, run_end - run_begin)),
                                      run_begin, run_end, lexicon, findings);
            } catch (const CodecError&) {
                // Valid-looking tokens that do not map to letters; ignore.
            }
        }
        i = std::max(run_end, run_begin + 1);
    }
}

void scan_phrases(std::string_view body, const std::vector<std::string>& phrases,
                  FindingKind kind, bool require_following_word,
                  std::vector<Finding>& findings) {
    std::string lowered = text::to_lower(body);
    for (const auto& phrase : phrases) {
        std::size_t pos = 0;
        while ((pos = lowered.find(phrase, pos)) != std::string::npos) {
            std::size_t end = pos + phrase.size();
            if (require_following_word) {
                // The persona must continue within the same sentence.
                bool has_tail = end < body.size() && text::is_word_char(body[end]);
                if (!has_tail) {
                    ++pos;
                    continue;
                }
            }
            std::size_t sentence_end = end;
            while (sentence_end < body.size() && body[sentence_end] != '.' &&
                   body[sentence_end] != '!' && body[sentence_end] != '?' &&
                   body[sentence_end] != '\n') {
                ++sentence_end;
            }
            findings.push_back(
                Finding{kind, pos, sentence_end, snippet(body, pos, sentence_end)});
            pos = end;
        }
    }
}

}  // namespace

std::string_view finding_kind_name(FindingKind kind) {
    switch (kind) {
        case FindingKind::DecodedTaboo: return "decoded_taboo";
        case FindingKind::ObfuscationMarker: return "obfuscation_marker";
        case FindingKind::RolePlayPattern: return "role_play_pattern";
        case FindingKind::RepeatInstruction: return "repeat_instruction";
    }
    return "decoded_taboo";
}

PoisonReport deep_scan(const docio::StoredDocument& doc, const codecs::TabooLexicon& lexicon,
                       const DetectorConfig& config) {
    std::string body;
    try {
        body = docio::extract_text(doc.bytes, doc.format);
    } catch (const FormatError& e) {
        throw ScanError("document '" + doc.id + "': " + e.what());
    }

    PoisonReport report;
    report.doc_id = doc.id;

    auto markers = codecs::find_markers(body, codecs::MarkerScan::Lenient);
    for (const auto& marker : markers) {
        report.findings.push_back(Finding{FindingKind::ObfuscationMarker, marker.begin,
                                          marker.end,
                                          std::string(codecs::scheme_name(marker.scheme)) +
                                              " marker"});
        try {
            collect_decoded_taboo(codecs::decode_marker(marker), marker.begin, marker.end,
                                  lexicon, report.findings);
        } catch (const CodecError&) {
            // A marker that does not decode is still a marker finding.
        }
    }

    // Plaintext hits: the deep scan sees through the container, so anything
    // the shallow censor would reject in plaintext is found here too.
    for (const auto& tok : text::tokenize(body)) {
        if (lexicon.contains(tok.word) &&
            !inside_any(tok.offset, tok.offset + tok.length, markers)) {
            report.findings.push_back(Finding{FindingKind::DecodedTaboo, tok.offset,
                                              tok.offset + tok.length,
                                              "plaintext taboo term '" + tok.word + "'"});
        }
    }

    scan_raw_base64(body, markers, lexicon, config, report.findings);
    scan_raw_morse(body, markers, lexicon, config, report.findings);
    scan_phrases(body, kRolePlayPhrases, FindingKind::RolePlayPattern,
                 /*require_following_word=*/true, report.findings);
    scan_phrases(body, kRepeatPhrases, FindingKind::RepeatInstruction,
                 /*require_following_word=*/false, report.findings);

    std::stable_sort(report.findings.begin(), report.findings.end(),
                     [](const Finding& a, const Finding& b) {
                         if (a.begin != b.begin) return a.begin < b.begin;
                         if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                         return a.end < b.end;
                     });
    return report;
}

std::size_t StoreScanResult::flagged_count() const {
    return static_cast<std::size_t>(
        std::count_if(reports.begin(), reports.end(),
                      [](const PoisonReport& r) { return r.flagged(); }));
}

std::size_t StoreScanResult::clean_count() const {
    return reports.size() - flagged_count();
}

StoreScanResult scan_documents(const std::vector<docio::StoredDocument>& docs,
                               const codecs::TabooLexicon& lexicon,
                               const DetectorConfig& config) {
    StoreScanResult result;
    for (const auto& doc : docs) {
        try {
            result.reports.push_back(deep_scan(doc, lexicon, config));
        } catch (const ScanError& e) {
            result.failures.push_back(ScanFailure{doc.id, e.what()});
        }
    }
    return result;
}

StoreScanResult scan_store(const rag::VectorStore& store, const codecs::TabooLexicon& lexicon,
                           const DetectorConfig& config) {
    std::vector<docio::StoredDocument> docs;
    for (const auto& doc_id : store.doc_ids()) {
        std::string body;
        for (const auto& chunk : store.chunks_for(doc_id)) {
            if (!body.empty()) body += "\n";
            body += chunk.text;
        }
        docs.push_back(docio::make_document(doc_id, body, docio::DocumentFormat::PlainText));
    }
    return scan_documents(docs, lexicon, config);
}

std::string render_reports_markdown(const StoreScanResult& result) {
    std::ostringstream out;
    out << "| document | verdict | findings |\n|---|---|---|\n";
    for (const auto& report : result.reports) {
        out << "| " << report.doc_id << " | " << (report.flagged() ? "poisoned" : "clean")
            << " | ";
        for (std::size_t i = 0; i < report.findings.size(); ++i) {
            if (i > 0) out << "; ";
            const auto& f = report.findings[i];
            out << finding_kind_name(f.kind) << " [" << f.begin << "," << f.end << ") "
                << f.evidence;
        }
        out << " |\n";
    }
    for (const auto& failure : result.failures) {
        out << "| " << failure.doc_id << " | error | " << failure.message << " |\n";
    }
    out << "\nflagged: " << result.flagged_count() << ", clean: " << result.clean_count()
        << ", errored: " << result.errored_count() << "\n";
    return out.str();
}

std::string render_reports_csv(const StoreScanResult& result) {
    auto escape = [](std::string_view field) {
        std::string out = "\"";
        for (char c : field) {
            if (c == '"') out += "\"\"";
            else out.push_back(c);
        }
        out += "\"";
        return out;
    };
    std::ostringstream out;
    out << "document,verdict,kind,span_begin,span_end,evidence\r\n";
    for (const auto& report : result.reports) {
        if (report.findings.empty()) {
            out << escape(report.doc_id) << ",clean,,,,\r\n";
            continue;
        }
        for (const auto& f : report.findings) {
            out << escape(report.doc_id) << ",poisoned," << finding_kind_name(f.kind) << ','
                << f.begin << ',' << f.end << ',' << escape(f.evidence) << "\r\n";
        }
    }
    for (const auto& failure : result.failures) {
        out << escape(failure.doc_id) << ",error,,,," << escape(failure.message) << "\r\n";
    }
    return out.str();
}

}  // namespace plc::detector
