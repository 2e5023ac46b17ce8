#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "plc/backends.hpp"
#include "plc/error.hpp"

namespace plc::rag {

inline constexpr std::size_t kEmbeddingDim = 256;
inline constexpr std::size_t kDefaultChunkSize = 500;
inline constexpr std::size_t kDefaultChunkOverlap = 50;
inline constexpr std::size_t kDefaultTopK = 3;

/// Deterministic bag-of-words embedding: tokens are hashed with 64-bit
/// FNV-1a into 256 bins by term frequency, then L2-normalized. Texts with no
/// tokens embed to the reserved all-zero vector.
struct EmbeddingVector {
    std::array<double, kEmbeddingDim> values{};

    bool is_zero() const;
    double norm() const;
};

EmbeddingVector embed(std::string_view text);

/// Cosine similarity; 0.0 when either vector is the zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Fixed windows of `size` characters advancing by `size - overlap`; the
/// last window may be shorter. Empty body yields no chunks. Throws
/// ConfigError when overlap >= size or size == 0.
std::vector<std::string> chunk_text(std::string_view body,
                                    std::size_t size = kDefaultChunkSize,
                                    std::size_t overlap = kDefaultChunkOverlap);

struct Chunk {
    std::string doc_id;
    std::size_t seq = 0;
    std::string text;
    EmbeddingVector embedding;
};

struct SearchHit {
    Chunk chunk;
    double score;
};

/// In-memory vector store over whole documents. Concurrent readers are safe;
/// writers need external exclusion.
class VectorStore {
public:
    /// Embeds and indexes the chunks, replacing any previous chunks of the
    /// same document atomically. An empty chunk list removes the document.
    void upsert(const std::string& doc_id, const std::vector<std::string>& chunk_texts);

    /// Top-k chunks by cosine similarity, ties broken by (doc_id, seq)
    /// ascending. A zero-vector query returns nothing. Throws ConfigError
    /// when k == 0.
    std::vector<SearchHit> retrieve(std::string_view query, std::size_t k = kDefaultTopK) const;

    std::vector<Chunk> chunks_for(const std::string& doc_id) const;
    std::vector<Chunk> all_chunks() const;  // (doc_id, seq) ascending
    std::vector<std::string> doc_ids() const;
    std::size_t size() const;  // total chunk count
    bool empty() const { return size() == 0; }

    /// Version-tagged JSON snapshot. Embeddings are recomputed on load; the
    /// embedding is a pure function of the chunk text.
    void save(const std::filesystem::path& path) const;
    static VectorStore load(const std::filesystem::path& path);

private:
    std::map<std::string, std::vector<Chunk>> docs_;
};

/// Maps everyday query keywords to a poisoned document.
struct TriggerRule {
    std::vector<std::string> keywords;  // lowercase
    std::string doc_id;
    int priority = 0;
};

/// Rules whose keywords occur as whole lowercase tokens of the query,
/// ordered by priority ascending.
std::vector<TriggerRule> match_triggers(std::string_view query,
                                        const std::vector<TriggerRule>& rules);

class PromptTemplate {
public:
    /// Requires the placeholders `{context}` and `{question}` exactly once
    /// each; throws ConfigError otherwise.
    static PromptTemplate from_text(std::string body);
    static PromptTemplate load(const std::filesystem::path& path);

    const std::string& body() const { return body_; }

    /// `{context}` becomes the chunk texts joined by blank lines in the
    /// given order; `{question}` becomes the query verbatim.
    std::string assemble(const std::vector<Chunk>& context, std::string_view question) const;

private:
    std::string body_;
};

struct Provenance {
    std::vector<TriggerRule> matched_rules;
    std::vector<std::pair<std::string, std::size_t>> context_chunks;  // (doc_id, seq)
    std::string prompt;
};

struct Answer {
    std::string response;
    Provenance provenance;
};

/// A backend failure wrapped with the pipeline state that produced it.
class PipelineError : public Error {
public:
    PipelineError(const std::string& what_arg, Provenance provenance)
        : Error(what_arg), provenance_(std::move(provenance)) {}
    const Provenance& provenance() const { return provenance_; }

private:
    Provenance provenance_;
};

/// The full answer pipeline: trigger matching, forced inclusion of every
/// chunk of each matched document ahead of the similarity results, top-k
/// retrieval, deduplication, prompt assembly, then the backend call. The
/// user-facing value is the response; everything else lands in provenance.
Answer answer_query(const VectorStore& store, const std::vector<TriggerRule>& rules,
                    const PromptTemplate& prompt_template, backends::ChatBackend& backend,
                    std::string_view query, std::size_t k = kDefaultTopK);

}  // namespace plc::rag
