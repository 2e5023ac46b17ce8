#pragma once

#include <string>
#include <vector>

#include "plc/codecs.hpp"
#include "plc/docio.hpp"

namespace plc::censor {

/// One blocklisted token found by the scan.
struct Hit {
    std::string term;
    std::size_t offset;
};

struct CensorVerdict {
    std::vector<Hit> reasons;  // empty means Pass
    bool passed() const { return reasons.empty(); }
};

/// The ingestion-time filter. Plaintext documents are tokenized (split on
/// non-alphanumerics, lowercased) and rejected when any token is in the
/// lexicon, listing every hit. Opaque containers (PortableDoc) always pass
/// without content inspection; that blind spot is exactly what the deep
/// scanner in plc::detector closes. Throws ScanError for undecodable
/// plaintext.
CensorVerdict shallow_scan(const docio::StoredDocument& doc,
                           const codecs::TabooLexicon& lexicon);

}  // namespace plc::censor
