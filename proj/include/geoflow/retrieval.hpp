#pragma once

// Two-tier tool integration (function tools + reference scripts) and the
// dual-branch knowledge base (offline chunked vector index + online search
// adapter), served through exhaustive top-k cosine queries.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/core.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/llm.hpp"

namespace geoflow {

// ---------------------------------------------------------------------------
// Embedding

constexpr std::size_t kEmbeddingDims = 256;

struct EmbeddingVector {
    std::vector<double> values;  // size kEmbeddingDims, L2-normalized or all-zero

    bool is_zero() const {
        for (double v : values)
            if (v != 0.0) return false;
        return true;
    }
};

inline std::uint64_t fnv1a64(const std::string& token) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : token) {
        hash ^= static_cast<std::uint64_t>(c);
        hash *= 1099511628211ULL;
    }
    return hash;
}

// Deterministic fallback embedder: lowercase, split on non-alphanumeric runs,
// FNV-1a 64 per token, bucket = hash mod 256, accumulate counts, L2-normalize.
// Empty text maps to the zero vector.
inline EmbeddingVector embed_text(const std::string& text) {
    EmbeddingVector out;
    out.values.assign(kEmbeddingDims, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        out.values[fnv1a64(token) % kEmbeddingDims] += 1.0;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    double norm_sq = 0.0;
    for (double v : out.values) norm_sq += v * v;
    if (norm_sq > 0.0) {
        double norm = std::sqrt(norm_sq);
        for (double& v : out.values) v /= norm;
    }
    return out;
}

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDims; ++i) dot += a.values[i] * b.values[i];
    return dot;  // inputs are unit (or zero) vectors
}

// Pluggable embedder contract; the pinned fallback is the default everywhere.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(const std::string& text) const = 0;
};

class FallbackEmbedder : public Embedder {
public:
    EmbeddingVector embed(const std::string& text) const override { return embed_text(text); }
};

// ---------------------------------------------------------------------------
// Chunking

struct Chunk {
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    std::size_t span_start = 0;
    std::size_t span_end = 0;
};

// Fixed-window chunking with exact overlap; split points prefer the nearest
// paragraph or sentence boundary within the final 20% of the window, else a
// hard cut.
inline std::vector<Chunk> chunk_document(const std::string& text, std::size_t max_chars,
                                         std::size_t overlap, const std::string& doc_id = "") {
    if (max_chars == 0) throw ParameterError("max_chars must be positive");
    if (overlap >= max_chars) throw ParameterError("overlap must be smaller than max_chars");
    std::vector<Chunk> chunks;
    if (text.empty()) return chunks;

    std::size_t pos = 0;
    int ordinal = 0;
    while (pos < text.size()) {
        std::size_t hard_end = pos + max_chars;
        std::size_t end;
        if (hard_end >= text.size()) {
            end = text.size();
        } else {
            end = hard_end;
            // Search the final 20% of the window for a boundary.
            std::size_t region_start = hard_end - std::max<std::size_t>(1, max_chars / 5);
            std::size_t best = std::string::npos;
            for (std::size_t i = hard_end; i-- > region_start && i > pos;) {
                if (text[i] == '\n' && text[i - 1] == '\n') {  // paragraph break
                    best = i + 1;
                    break;
                }
            }
            if (best == std::string::npos) {
                for (std::size_t i = hard_end; i-- > region_start && i > pos;) {
                    char c = text[i];
                    if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() &&
                        std::isspace(static_cast<unsigned char>(text[i + 1]))) {
                        best = i + 1;
                        break;
                    }
                }
            }
            if (best != std::string::npos && best > pos) end = best;
        }

        Chunk c;
        c.doc_id = doc_id;
        c.ordinal = ordinal++;
        c.span_start = pos;
        c.span_end = end;
        c.text = text.substr(pos, end - pos);
        chunks.push_back(std::move(c));
        if (end >= text.size()) break;
        pos = std::max(end - overlap, pos + 1);
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Catalog

enum class Tier { function_tool, reference_script, knowledge_chunk, external_command };

inline std::string to_string(Tier t) {
    switch (t) {
        case Tier::function_tool: return "function_tool";
        case Tier::reference_script: return "reference_script";
        case Tier::knowledge_chunk: return "knowledge_chunk";
        case Tier::external_command: return "external_command";
    }
    return "function_tool";
}

inline Tier tier_from_string(const std::string& s) {
    if (s == "function_tool") return Tier::function_tool;
    if (s == "reference_script") return Tier::reference_script;
    if (s == "knowledge_chunk") return Tier::knowledge_chunk;
    if (s == "external_command") return Tier::external_command;
    throw ParseError("unknown tier: " + s);
}

struct CatalogEntry {
    std::string entry_id;
    Tier tier = Tier::function_tool;
    std::string description;  // natural-language functional description
    std::string body;         // source text or command template
    EmbeddingVector embedding;  // empty values => computed on add
    std::string provenance;
};

inline void validate(const CatalogEntry& e) {
    if (e.entry_id.empty()) throw ParameterError("catalog entry needs an id");
    if (e.description.empty())
        throw ParameterError("catalog entry " + e.entry_id + " needs a description");
    if (e.tier == Tier::external_command) {
        if (e.body.find("{input}") == std::string::npos ||
            e.body.find("{output}") == std::string::npos)
            throw ParameterError("external_command entry " + e.entry_id +
                                 " must carry {input}/{output} placeholders");
    }
}

inline json to_json(const CatalogEntry& e, bool with_embedding = true) {
    json j{{"entry_id", e.entry_id},
           {"tier", to_string(e.tier)},
           {"description", e.description},
           {"body", e.body},
           {"provenance", e.provenance}};
    if (with_embedding && !e.embedding.values.empty()) j["embedding"] = e.embedding.values;
    return j;
}

inline CatalogEntry catalog_entry_from_json(const json& j) {
    CatalogEntry e;
    e.entry_id = j.at("entry_id").get<std::string>();
    e.tier = tier_from_string(j.at("tier").get<std::string>());
    e.description = j.at("description").get<std::string>();
    e.body = j.value("body", "");
    e.provenance = j.value("provenance", "");
    if (j.contains("embedding")) {
        e.embedding.values = j.at("embedding").get<std::vector<double>>();
        if (e.embedding.values.size() != kEmbeddingDims)
            throw ParseError("embedding for " + e.entry_id + " has wrong dimension");
    }
    return e;
}

struct SearchResult {
    std::string entry_id;
    double score = 0.0;
    int rank = 0;
};

// Exhaustive-scan index. Immutable once built; queries are safe to run
// concurrently. Corpus sizes here make O(n*d) per query trivially fast.
class CatalogIndex {
public:
    void add(CatalogEntry entry) {
        validate(entry);
        if (ids_.count(entry.entry_id))
            throw DuplicateEntry("duplicate entry id: " + entry.entry_id);
        if (entry.embedding.values.size() != kEmbeddingDims)
            entry.embedding = embed_text(entry.description);
        ids_.insert(entry.entry_id);
        entries_.push_back(std::move(entry));
    }

    void add_all(std::vector<CatalogEntry> entries) {
        for (auto& e : entries) add(std::move(e));
    }

    std::size_t size() const { return entries_.size(); }

    const CatalogEntry* find(const std::string& entry_id) const {
        for (const auto& e : entries_)
            if (e.entry_id == entry_id) return &e;
        return nullptr;
    }

    std::vector<const CatalogEntry*> by_tier(Tier t) const {
        std::vector<const CatalogEntry*> out;
        for (const auto& e : entries_)
            if (e.tier == t) out.push_back(&e);
        return out;
    }

    // Exactly min(k, matching entries) results, ordered by descending cosine,
    // ties broken by ascending entry_id.
    std::vector<SearchResult> query_top_k(const std::string& query_text, int k,
                                          std::optional<Tier> tier_filter = std::nullopt) const {
        if (k <= 0) throw ParameterError("k must be positive");
        EmbeddingVector q = embed_text(query_text);
        std::vector<SearchResult> scored;
        for (const auto& e : entries_) {
            if (tier_filter && e.tier != *tier_filter) continue;
            scored.push_back({e.entry_id, cosine(q, e.embedding), 0});
        }
        std::sort(scored.begin(), scored.end(), [](const SearchResult& a, const SearchResult& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.entry_id < b.entry_id;
        });
        if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = static_cast<int>(i) + 1;
        return scored;
    }

    // Persisted as index/<tier>.jsonl, one entry per line.
    void save(const fs::path& dir) const {
        fs::create_directories(dir);
        std::map<Tier, std::ofstream> files;
        for (const auto& e : entries_) {
            auto it = files.find(e.tier);
            if (it == files.end()) {
                it = files.emplace(e.tier, std::ofstream(dir / (to_string(e.tier) + ".jsonl")))
                         .first;
            }
            it->second << to_json(e).dump() << "\n";
        }
    }

    static CatalogIndex load(const fs::path& dir) {
        CatalogIndex index;
        if (!fs::exists(dir)) return index;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f);
            std::string line;
            int line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                try {
                    index.add(catalog_entry_from_json(json::parse(line)));
                } catch (const json::exception& e) {
                    throw ParseError("bad catalog line in " + f.string() + ": " + e.what(),
                                     line_no);
                }
            }
        }
        return index;
    }

private:
    std::vector<CatalogEntry> entries_;
    std::set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Script descriptions

inline std::string truncate_words(const std::string& text, int max_words) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string word;
    int n = 0;
    while (in >> word && n < max_words) {
        if (n++) out << ' ';
        out << word;
    }
    return out.str();
}

// One LLM call producing a <= 60-word functional description for a script.
inline std::string describe_script(const std::string& body, LlmGateway& gateway) {
    if (body.empty()) throw ParameterError("cannot describe an empty script");
    std::string prompt = gateway.prompts().render("script_describe", json{{"body", body}});
    ChatResponse resp = gateway.complete(make_request(AgentRole::data_summary, prompt));
    return truncate_words(resp.text, 60);
}

// ---------------------------------------------------------------------------
// Online branch

struct WebHit {
    std::string title;
    std::string url;
    std::string snippet;
};

class OnlineSearchAdapter {
public:
    virtual ~OnlineSearchAdapter() = default;
    virtual std::vector<WebHit> search(const std::string& query, int k) = 0;
    virtual bool enabled() const { return true; }
};

// Default adapter: the online branch is off; callers get an empty result and
// the ledger records a search_disabled marker.
class DisabledSearch : public OnlineSearchAdapter {
public:
    std::vector<WebHit> search(const std::string&, int) override { return {}; }
    bool enabled() const override { return false; }
};

class FixtureSearch : public OnlineSearchAdapter {
public:
    explicit FixtureSearch(std::vector<WebHit> hits) : hits_(std::move(hits)) {}
    std::vector<WebHit> search(const std::string&, int k) override {
        std::vector<WebHit> out = hits_;
        if (out.size() > static_cast<std::size_t>(std::max(0, k)))
            out.resize(static_cast<std::size_t>(k));
        return out;
    }

private:
    std::vector<WebHit> hits_;
};

inline std::vector<WebHit> online_search(OnlineSearchAdapter& adapter, const std::string& query,
                                         int k, Ledger* ledger = nullptr,
                                         Stage stage = Stage::data_preparation) {
    if (!adapter.enabled()) {
        if (ledger)
            ledger->append(stage, EventKind::llm_usage,
                           json{{"marker", "search_disabled"}, {"query", query}});
        return {};
    }
    try {
        return adapter.search(query, k);
    } catch (const SearchUnavailable&) {
        throw;
    } catch (const std::exception& e) {
        throw SearchUnavailable(std::string("online search failed: ") + e.what());
    }
}

}  // namespace geoflow
