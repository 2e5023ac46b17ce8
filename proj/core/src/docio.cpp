#include "plc/docio.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace plc::docio {

namespace {

// The emitter writes exactly this five-object layout; the extractor accepts
// nothing else. Objects 1, 2, 3 and 5 are byte-constant, object 4 carries the
// body as a literal string.
constexpr std::string_view kHeader = "%PDF-1.4\n";
constexpr std::string_view kObj1 = "1 0 obj\n<< /Type /Catalog /Pages 2 0 R >>\nendobj\n";
constexpr std::string_view kObj2 = "2 0 obj\n<< /Type /Pages /Kids [3 0 R] /Count 1 >>\nendobj\n";
constexpr std::string_view kObj3 =
    "3 0 obj\n<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
    "/Resources << /Font << /F1 5 0 R >> >> /Contents 4 0 R >>\nendobj\n";
constexpr std::string_view kObj5 =
    "5 0 obj\n<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>\nendobj\n";
constexpr std::string_view kStreamPrefix = "BT /F1 12 Tf 72 720 Td (";
constexpr std::string_view kStreamSuffix = ") Tj ET";
constexpr std::size_t kObjectCount = 6;  // including the free object 0

bool is_pdf_body_char(char c) {
    return c == '\n' || (c >= 0x20 && c <= 0x7E);
}

std::string escape_literal(std::string_view body) {
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (!is_pdf_body_char(c)) {
            char buf[64];
            std::snprintf(buf, sizeof(buf),
                          "PDF body: unsupported byte 0x%02X at offset %zu",
                          static_cast<unsigned char>(c), i);
            throw FormatError(buf);
        }
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '(': out += "\\("; break;
            case ')': out += "\\)"; break;
            case '\n': out += "\\n"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

[[noreturn]] void unsupported(const std::string& why) {
    throw FormatError("unsupported PDF: " + why);
}

void expect(std::string_view bytes, std::size_t offset, std::string_view literal,
            const std::string& what) {
    if (bytes.substr(offset, literal.size()) != literal) unsupported(what);
}

std::size_t parse_uint(std::string_view s, std::size_t& pos, const std::string& what) {
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        value = value * 10 + static_cast<std::size_t>(s[pos] - '0');
        ++pos;
        ++digits;
    }
    if (digits == 0) unsupported("expected a number in " + what);
    return value;
}

bool utf8_valid(std::string_view bytes) {
    std::size_t i = 0;
    while (i < bytes.size()) {
        unsigned char c = static_cast<unsigned char>(bytes[i]);
        std::size_t len;
        if (c < 0x80) len = 1;
        else if ((c & 0xE0) == 0xC0) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0) len = 4;
        else return false;
        if (i + len > bytes.size()) return false;
        for (std::size_t j = 1; j < len; ++j) {
            if ((static_cast<unsigned char>(bytes[i + j]) & 0xC0) != 0x80) return false;
        }
        if (len == 2 && c < 0xC2) return false;                       // overlong
        if (len == 3 && c == 0xE0 && static_cast<unsigned char>(bytes[i + 1]) < 0xA0) return false;
        if (len == 4 && c == 0xF0 && static_cast<unsigned char>(bytes[i + 1]) < 0x90) return false;
        if (len == 4 && (c > 0xF4 || (c == 0xF4 && static_cast<unsigned char>(bytes[i + 1]) > 0x8F)))
            return false;
        i += len;
    }
    return true;
}

}  // namespace

std::string_view format_name(DocumentFormat format) {
    return format == DocumentFormat::PlainText ? "txt" : "pdf";
}

std::string_view format_extension(DocumentFormat format) {
    return format == DocumentFormat::PlainText ? ".txt" : ".pdf";
}

std::optional<DocumentFormat> format_from_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".txt") return DocumentFormat::PlainText;
    if (ext == ".pdf") return DocumentFormat::PortableDoc;
    return std::nullopt;
}

std::string emit_plaintext(std::string_view body) {
    return std::string(body);
}

std::string emit_pdf(std::string_view body) {
    std::string stream_content = std::string(kStreamPrefix) + escape_literal(body) +
                                 std::string(kStreamSuffix);

    std::array<std::string, kObjectCount> objects;
    objects[1] = kObj1;
    objects[2] = kObj2;
    objects[3] = kObj3;
    objects[4] = "4 0 obj\n<< /Length " + std::to_string(stream_content.size()) +
                 " >>\nstream\n" + stream_content + "\nendstream\nendobj\n";
    objects[5] = kObj5;

    std::string out(kHeader);
    std::array<std::size_t, kObjectCount> offsets{};
    for (std::size_t i = 1; i < kObjectCount; ++i) {
        offsets[i] = out.size();
        out += objects[i];
    }

    std::size_t xref_offset = out.size();
    out += "xref\n0 " + std::to_string(kObjectCount) + "\n";
    out += "0000000000 65535 f \n";
    for (std::size_t i = 1; i < kObjectCount; ++i) {
        char entry[21];
        std::snprintf(entry, sizeof(entry), "%010zu 00000 n \n", offsets[i]);
        out += entry;
    }
    out += "trailer\n<< /Size " + std::to_string(kObjectCount) + " /Root 1 0 R >>\n";
    out += "startxref\n" + std::to_string(xref_offset) + "\n%%EOF";
    return out;
}

namespace {

std::string extract_pdf(std::string_view bytes) {
    if (bytes.substr(0, kHeader.size()) != kHeader) unsupported("missing %PDF-1.4 header");
    if (bytes.size() < 5 || bytes.substr(bytes.size() - 5) != "%%EOF") {
        unsupported("missing %%EOF trailer");
    }

    // startxref points at the xref table.
    std::size_t sx = bytes.rfind("startxref\n");
    if (sx == std::string_view::npos) unsupported("missing startxref");
    std::size_t pos = sx + 10;
    std::size_t xref_offset = parse_uint(bytes, pos, "startxref");

    expect(bytes, xref_offset, "xref\n0 6\n", "xref table header");
    std::size_t entry_pos = xref_offset + 9;
    expect(bytes, entry_pos, "0000000000 65535 f \n", "xref free entry");
    entry_pos += 20;

    std::array<std::size_t, kObjectCount> offsets{};
    for (std::size_t i = 1; i < kObjectCount; ++i) {
        std::string_view entry = bytes.substr(entry_pos, 20);
        if (entry.size() != 20 || entry.substr(10, 10) != " 00000 n \n") {
            unsupported("malformed xref entry for object " + std::to_string(i));
        }
        std::size_t p = 0;
        offsets[i] = parse_uint(entry, p, "xref entry");
        if (p != 10) unsupported("malformed xref offset for object " + std::to_string(i));
        entry_pos += 20;
    }

    // Byte-accurate offsets: each entry must land exactly on its object.
    for (std::size_t i = 1; i < kObjectCount; ++i) {
        std::string head = std::to_string(i) + " 0 obj\n";
        if (offsets[i] >= bytes.size() || bytes.substr(offsets[i], head.size()) != head) {
            unsupported("xref offset for object " + std::to_string(i) +
                        " does not match the object position");
        }
    }

    expect(bytes, entry_pos, "trailer\n<< /Size 6 /Root 1 0 R >>\nstartxref\n",
           "trailer dictionary");

    // Fixed objects must match the subset byte for byte.
    expect(bytes, offsets[1], kObj1, "catalog object");
    expect(bytes, offsets[2], kObj2, "pages object");
    expect(bytes, offsets[3], kObj3, "page object");
    expect(bytes, offsets[5], kObj5, "font object");

    // Object 4: << /Length N >> stream ... endstream
    std::size_t p = offsets[4];
    expect(bytes, p, "4 0 obj\n<< /Length ", "content stream object");
    p += 19;
    std::size_t length = parse_uint(bytes, p, "stream /Length");
    expect(bytes, p, " >>\nstream\n", "stream keyword");
    p += 11;
    if (p + length > bytes.size()) unsupported("stream length exceeds file size");
    std::string_view content = bytes.substr(p, length);
    expect(bytes, p + length, "\nendstream\nendobj\n", "endstream keyword");

    if (content.substr(0, kStreamPrefix.size()) != kStreamPrefix) {
        unsupported("unexpected content stream operators");
    }

    // Walk the literal string honoring escapes.
    std::string body;
    std::size_t i = kStreamPrefix.size();
    bool closed = false;
    while (i < content.size()) {
        char c = content[i];
        if (c == '\\') {
            if (i + 1 >= content.size()) unsupported("dangling escape in literal string");
            char esc = content[i + 1];
            switch (esc) {
                case '\\': body.push_back('\\'); break;
                case '(': body.push_back('('); break;
                case ')': body.push_back(')'); break;
                case 'n': body.push_back('\n'); break;
                default: unsupported(std::string("escape sequence \\") + esc +
                                     " is outside the emitted subset");
            }
            i += 2;
        } else if (c == ')') {
            closed = true;
            ++i;
            break;
        } else if (c == '(') {
            unsupported("nested literal string");
        } else {
            body.push_back(c);
            ++i;
        }
    }
    if (!closed) unsupported("unterminated literal string");
    if (content.substr(i - 1) != kStreamSuffix) unsupported("unexpected trailing operators");
    return body;
}

}  // namespace

std::string extract_text(std::string_view bytes, DocumentFormat format) {
    if (format == DocumentFormat::PlainText) {
        if (!utf8_valid(bytes)) throw FormatError("plaintext document is not valid UTF-8");
        return std::string(bytes);
    }
    return extract_pdf(bytes);
}

StoredDocument make_document(std::string id, std::string_view body, DocumentFormat format) {
    StoredDocument doc;
    doc.id = std::move(id);
    doc.format = format;
    doc.source_body = std::string(body);
    doc.bytes = format == DocumentFormat::PlainText ? emit_plaintext(body) : emit_pdf(body);
    return doc;
}

StoredDocument load_document(const std::filesystem::path& path) {
    auto format = format_from_extension(path);
    if (!format) {
        throw FormatError("unrecognized document extension: " + path.string() +
                          " (expected .txt or .pdf)");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open document: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    StoredDocument doc;
    doc.id = path.stem().string();
    doc.format = *format;
    doc.bytes = buf.str();
    doc.source_body = extract_text(doc.bytes, doc.format);
    return doc;
}

void write_document(const StoredDocument& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write document: " + path.string());
    out.write(doc.bytes.data(), static_cast<std::streamsize>(doc.bytes.size()));
    if (!out) throw IoError("short write: " + path.string());
}

}  // namespace plc::docio
