#include "plc/censor.hpp"

#include "plc/text.hpp"

namespace plc::censor {

CensorVerdict shallow_scan(const docio::StoredDocument& doc,
                           const codecs::TabooLexicon& lexicon) {
    CensorVerdict verdict;
    if (doc.format == docio::DocumentFormat::PortableDoc) {
        return verdict;  // opaque container: no content inspection
    }
    std::string body;
    try {
        body = docio::extract_text(doc.bytes, doc.format);
    } catch (const FormatError& e) {
        throw ScanError("document '" + doc.id + "': " + e.what());
    }
    for (const auto& tok : text::tokenize(body)) {
        if (lexicon.contains(tok.word)) {
            verdict.reasons.push_back(Hit{tok.word, tok.offset});
        }
    }
    return verdict;
}

}  // namespace plc::censor
