#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "plc/error.hpp"

namespace plc::docio {

enum class DocumentFormat { PlainText, PortableDoc };

std::string_view format_name(DocumentFormat format);        // "txt" | "pdf"
std::string_view format_extension(DocumentFormat format);   // ".txt" | ".pdf"
std::optional<DocumentFormat> format_from_extension(const std::filesystem::path& path);

/// A document as it sits in (or enters) the knowledge base. For documents
/// produced by this module, extract_text(bytes, format) == source_body.
struct StoredDocument {
    std::string id;
    DocumentFormat format = DocumentFormat::PlainText;
    std::string bytes;
    std::string source_body;
};

/// Identity: the UTF-8 bytes of the body.
std::string emit_plaintext(std::string_view body);

/// A minimal single-page PDF 1.4 whose one content stream holds the body as
/// a literal string. Body is restricted to printable ASCII plus newline;
/// '\', '(' and ')' are backslash-escaped and newlines become "\n". Throws
/// FormatError naming any unsupported character.
std::string emit_pdf(std::string_view body);

/// Inverse of the matching emit operation. PlainText requires valid UTF-8;
/// PortableDoc parses only the subset emit_pdf writes, verifying the header,
/// trailer and byte-accurate xref offsets. Anything else (fonts beyond the
/// built-in one, filters, multiple pages, foreign producers) is a
/// FormatError.
std::string extract_text(std::string_view bytes, DocumentFormat format);

StoredDocument make_document(std::string id, std::string_view body, DocumentFormat format);

/// Reads a file; id is the stem, format comes from the extension, and
/// source_body is recovered via extract_text.
StoredDocument load_document(const std::filesystem::path& path);

void write_document(const StoredDocument& doc, const std::filesystem::path& path);

}  // namespace plc::docio
