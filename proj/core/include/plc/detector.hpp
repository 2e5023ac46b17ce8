#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "plc/codecs.hpp"
#include "plc/docio.hpp"
#include "plc/ragcore.hpp"

namespace plc::detector {

enum class FindingKind { DecodedTaboo, ObfuscationMarker, RolePlayPattern, RepeatInstruction };

std::string_view finding_kind_name(FindingKind kind);

struct Finding {
    FindingKind kind;
    std::size_t begin;  // span in the extracted text
    std::size_t end;
    std::string evidence;
};

struct PoisonReport {
    std::string doc_id;
    std::vector<Finding> findings;

    bool flagged() const { return !findings.empty(); }
};

struct DetectorConfig {
    /// Raw (marker-less) Base64 spans shorter than this are never decoded.
    std::size_t min_base64_span = 8;
    /// Raw Morse needs at least this many consecutive valid letter tokens.
    std::size_t min_morse_tokens = 3;
};

/// Extracts the text whatever the container, then reports obfuscation
/// markers, decoded or plaintext lexicon hits (including Base64/Morse-shaped
/// spans outside any marker), role-play assignments ("you are a ..."), and
/// repeat-style instructions. Deterministic; findings are ordered by span.
/// Throws ScanError when the document cannot be parsed.
PoisonReport deep_scan(const docio::StoredDocument& doc, const codecs::TabooLexicon& lexicon,
                       const DetectorConfig& config = {});

struct ScanFailure {
    std::string doc_id;
    std::string message;
};

struct StoreScanResult {
    std::vector<PoisonReport> reports;
    std::vector<ScanFailure> failures;

    std::size_t flagged_count() const;
    std::size_t clean_count() const;
    std::size_t errored_count() const { return failures.size(); }
};

/// One report per document; per-document failures are collected, not fatal.
StoreScanResult scan_documents(const std::vector<docio::StoredDocument>& docs,
                               const codecs::TabooLexicon& lexicon,
                               const DetectorConfig& config = {});

/// Scans the text already sitting in a vector store (chunks re-joined per
/// document).
StoreScanResult scan_store(const rag::VectorStore& store, const codecs::TabooLexicon& lexicon,
                           const DetectorConfig& config = {});

std::string render_reports_markdown(const StoreScanResult& result);
std::string render_reports_csv(const StoreScanResult& result);

}  // namespace plc::detector
