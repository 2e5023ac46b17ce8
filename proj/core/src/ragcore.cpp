#include "plc/ragcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plc/text.hpp"

namespace plc::rag {

using json = nlohmann::json;

bool EmbeddingVector::is_zero() const {
    for (double v : values) {
        if (v != 0.0) return false;
    }
    return true;
}

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

EmbeddingVector embed(std::string_view input) {
    EmbeddingVector vec;
    bool any = false;
    for (const auto& tok : text::tokenize(input)) {
        vec.values[text::fnv1a64(tok.word) % kEmbeddingDim] += 1.0;
        any = true;
    }
    if (!any) return vec;  // reserved zero vector for token-free text
    double norm = vec.norm();
    for (double& v : vec.values) v /= norm;
    return vec;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.is_zero() || b.is_zero()) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) dot += a.values[i] * b.values[i];
    return dot;
}

std::vector<std::string> chunk_text(std::string_view body, std::size_t size,
                                    std::size_t overlap) {
    if (size == 0) throw ConfigError("chunk size must be positive");
    if (overlap >= size) {
        throw ConfigError("chunk overlap (" + std::to_string(overlap) +
                          ") must be smaller than chunk size (" + std::to_string(size) + ")");
    }
    std::vector<std::string> chunks;
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t end = std::min(pos + size, body.size());
        chunks.emplace_back(body.substr(pos, end - pos));
        if (end == body.size()) break;
        pos += size - overlap;
    }
    return chunks;
}

void VectorStore::upsert(const std::string& doc_id,
                         const std::vector<std::string>& chunk_texts) {
    std::vector<Chunk> chunks;
    chunks.reserve(chunk_texts.size());
    for (std::size_t seq = 0; seq < chunk_texts.size(); ++seq) {
        Chunk chunk;
        chunk.doc_id = doc_id;
        chunk.seq = seq;
        chunk.text = chunk_texts[seq];
        chunk.embedding = embed(chunk.text);
        chunks.push_back(std::move(chunk));
    }
    if (chunks.empty()) {
        docs_.erase(doc_id);
    } else {
        docs_[doc_id] = std::move(chunks);
    }
}

std::vector<SearchHit> VectorStore::retrieve(std::string_view query, std::size_t k) const {
    if (k == 0) throw ConfigError("retrieval k must be at least 1");
    EmbeddingVector q = embed(query);
    if (q.is_zero()) return {};
    std::vector<SearchHit> hits;
    hits.reserve(size());
    for (const auto& [doc_id, chunks] : docs_) {
        for (const auto& chunk : chunks) {
            hits.push_back(SearchHit{chunk, cosine(q, chunk.embedding)});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.chunk.doc_id != b.chunk.doc_id) return a.chunk.doc_id < b.chunk.doc_id;
        return a.chunk.seq < b.chunk.seq;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<Chunk> VectorStore::chunks_for(const std::string& doc_id) const {
    auto it = docs_.find(doc_id);
    return it == docs_.end() ? std::vector<Chunk>{} : it->second;
}

std::vector<Chunk> VectorStore::all_chunks() const {
    std::vector<Chunk> out;
    out.reserve(size());
    for (const auto& [doc_id, chunks] : docs_) {
        out.insert(out.end(), chunks.begin(), chunks.end());
    }
    return out;
}

std::vector<std::string> VectorStore::doc_ids() const {
    std::vector<std::string> out;
    out.reserve(docs_.size());
    for (const auto& [doc_id, chunks] : docs_) out.push_back(doc_id);
    return out;
}

std::size_t VectorStore::size() const {
    std::size_t total = 0;
    for (const auto& [doc_id, chunks] : docs_) total += chunks.size();
    return total;
}

void VectorStore::save(const std::filesystem::path& path) const {
    json docs = json::array();
    for (const auto& [doc_id, chunks] : docs_) {
        json chunk_texts = json::array();
        for (const auto& chunk : chunks) chunk_texts.push_back(chunk.text);
        docs.push_back(json{{"id", doc_id}, {"chunks", std::move(chunk_texts)}});
    }
    json snapshot{{"format", "plc-store"}, {"version", 1}, {"docs", std::move(docs)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write store snapshot: " + path.string());
    out << snapshot.dump(2) << '\n';
    if (!out) throw IoError("short write: " + path.string());
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open store snapshot: " + path.string());
    json snapshot;
    try {
        in >> snapshot;
    } catch (const json::exception& e) {
        throw FormatError("store snapshot " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!snapshot.is_object() || snapshot.value("format", "") != "plc-store") {
        throw FormatError("store snapshot " + path.string() + " has an unknown format tag");
    }
    if (snapshot.value("version", 0) != 1) {
        throw FormatError("store snapshot " + path.string() + " has an unsupported version");
    }
    VectorStore store;
    for (const auto& doc : snapshot.at("docs")) {
        std::vector<std::string> chunk_texts;
        for (const auto& chunk : doc.at("chunks")) chunk_texts.push_back(chunk.get<std::string>());
        store.upsert(doc.at("id").get<std::string>(), chunk_texts);
    }
    return store;
}

std::vector<TriggerRule> match_triggers(std::string_view query,
                                        const std::vector<TriggerRule>& rules) {
    std::vector<std::string> query_tokens;
    for (const auto& tok : text::tokenize(query)) query_tokens.push_back(tok.word);
    std::vector<TriggerRule> matched;
    for (const auto& rule : rules) {
        bool hit = std::any_of(rule.keywords.begin(), rule.keywords.end(),
                               [&](const std::string& kw) {
                                   return std::find(query_tokens.begin(), query_tokens.end(),
                                                    kw) != query_tokens.end();
                               });
        if (hit) matched.push_back(rule);
    }
    std::sort(matched.begin(), matched.end(),
              [](const TriggerRule& a, const TriggerRule& b) { return a.priority < b.priority; });
    return matched;
}

PromptTemplate PromptTemplate::from_text(std::string body) {
    for (std::string_view placeholder : {"{context}", "{question}"}) {
        std::size_t first = body.find(placeholder);
        if (first == std::string::npos) {
            throw ConfigError("prompt template is missing the " + std::string(placeholder) +
                              " placeholder");
        }
        if (body.find(placeholder, first + 1) != std::string::npos) {
            throw ConfigError("prompt template contains " + std::string(placeholder) +
                              " more than once");
        }
    }
    PromptTemplate t;
    t.body_ = std::move(body);
    return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prompt template: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return from_text(std::move(body));
}

std::string PromptTemplate::assemble(const std::vector<Chunk>& context,
                                     std::string_view question) const {
    std::string context_text;
    for (std::size_t i = 0; i < context.size(); ++i) {
        if (i > 0) context_text += "\n\n";
        context_text += context[i].text;
    }
    // Single pass over the original template so substituted text is never
    // re-scanned for placeholders.
    std::string out;
    out.reserve(body_.size() + context_text.size() + question.size());
    std::size_t pos = 0;
    while (pos < body_.size()) {
        std::size_t brace = body_.find('{', pos);
        if (brace == std::string::npos) {
            out += body_.substr(pos);
            break;
        }
        out += body_.substr(pos, brace - pos);
        if (body_.compare(brace, 9, "{context}") == 0) {
            out += context_text;
            pos = brace + 9;
        } else if (body_.compare(brace, 10, "{question}") == 0) {
            out += question;
            pos = brace + 10;
        } else {
            out.push_back('{');
            pos = brace + 1;
        }
    }
    return out;
}

Answer answer_query(const VectorStore& store, const std::vector<TriggerRule>& rules,
                    const PromptTemplate& prompt_template, backends::ChatBackend& backend,
                    std::string_view query, std::size_t k) {
    Provenance provenance;
    provenance.matched_rules = match_triggers(query, rules);

    std::vector<Chunk> context;
    auto seen = [&context](const Chunk& chunk) {
        return std::any_of(context.begin(), context.end(), [&](const Chunk& c) {
            return c.doc_id == chunk.doc_id && c.seq == chunk.seq;
        });
    };
    // Triggered documents are force-included ahead of similarity results.
    for (const auto& rule : provenance.matched_rules) {
        for (const auto& chunk : store.chunks_for(rule.doc_id)) {
            if (!seen(chunk)) context.push_back(chunk);
        }
    }
    for (const auto& hit : store.retrieve(query, k)) {
        if (!seen(hit.chunk)) context.push_back(hit.chunk);
    }
    for (const auto& chunk : context) {
        provenance.context_chunks.emplace_back(chunk.doc_id, chunk.seq);
    }

    provenance.prompt = prompt_template.assemble(context, query);

    Answer answer;
    try {
        answer.response = backend.chat("", provenance.prompt);
    } catch (const Error& e) {
        throw PipelineError(std::string("backend '") + backend.name() + "' failed: " + e.what(),
                            std::move(provenance));
    }
    answer.provenance = std::move(provenance);
    return answer;
}

}  // namespace plc::rag
