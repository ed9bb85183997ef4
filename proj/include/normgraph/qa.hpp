// Synthetic Q&A dataset generation: flat chunking of raw document text
// (independent of the graph builder), normativity filtering, pair
// generation through a pluggable backend, and validity filtering against
// index full texts.
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "normgraph/common.hpp"
#include "normgraph/manifest.hpp"

namespace normgraph {

struct EvalChunk {
    std::string doc_id;
    std::uint32_t ordinal = 0;  // 1-based within the document
    std::string text;
    std::uint32_t word_count = 0;   // words of >= min_word_chars chars
    std::uint32_t modal_count = 0;
};

struct QAPair {
    std::string id;
    std::string question;
    std::string answer;
    std::string source_doc;
    std::string source_chunk;
    std::vector<std::string> witnesses;
};

struct SynthesisConfig {
    std::uint32_t chunk_max_tokens = 400;
    std::uint32_t min_words = 40;
    std::uint32_t min_word_chars = 2;
    std::uint32_t min_modals = 1;
    std::uint32_t sample_n = 1000;
    std::uint64_t seed = 0;
    unsigned concurrency = 4;  // bounded in-flight generation requests

    void validate() const {
        if (chunk_max_tokens < 1 || min_words < 1 || min_word_chars < 1 || min_modals < 1 ||
            sample_n < 1 || concurrency < 1)
            throw Error("synthesis config: counts must be >= 1");
    }
};

// The nine English modal verbs used as the normativity proxy.
inline const std::vector<std::string>& modal_verbs() {
    static const std::vector<std::string> kModals = {"shall", "must",  "should", "may",  "can",
                                                     "will",  "might", "could",  "would"};
    return kModals;
}

inline bool is_modal(std::string_view word) {
    std::string w = to_lower(word);
    for (const auto& m : modal_verbs())
        if (w == m) return true;
    return false;
}

// Case-insensitive whole-word modal count.
inline std::uint32_t count_modals(std::string_view text) {
    std::uint32_t count = 0;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
        size_t b = i;
        while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
        if (i > b && is_modal(text.substr(b, i - b))) ++count;
    }
    return count;
}

// Space-delimited strings with at least min_chars alphanumeric
// characters; pure punctuation runs never count.
inline std::uint32_t count_words(std::string_view text, std::uint32_t min_chars) {
    std::uint32_t count = 0;
    for (const auto& [b, e] : word_spans(text)) {
        std::uint32_t alnum = 0;
        for (size_t i = b; i < e; ++i)
            if (is_alnum(text[i])) ++alnum;
        if (alnum >= min_chars) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------
// Chunking and filtering
// ---------------------------------------------------------------------------

// Greedy split of the raw document string into consecutive chunks of at
// most chunk_max_tokens whitespace tokens, preserving original bytes.
inline std::vector<EvalChunk> flat_chunk(const std::string& doc_id, std::string_view text,
                                         const SynthesisConfig& config) {
    std::vector<EvalChunk> out;
    const auto words = word_spans(text);
    const size_t max_tokens = config.chunk_max_tokens;
    for (size_t i = 0; i < words.size(); i += max_tokens) {
        size_t last = std::min(i + max_tokens, words.size()) - 1;
        EvalChunk c;
        c.doc_id = doc_id;
        c.ordinal = static_cast<std::uint32_t>(out.size() + 1);
        c.text = std::string(text.substr(words[i].first, words[last].second - words[i].first));
        c.word_count = count_words(c.text, config.min_word_chars);
        c.modal_count = count_modals(c.text);
        out.push_back(std::move(c));
    }
    return out;
}

// Normativity filter: enough real words and enough modal verbs.
inline std::vector<EvalChunk> filter_chunks(const std::vector<EvalChunk>& chunks,
                                            const SynthesisConfig& config) {
    std::vector<EvalChunk> out;
    for (const auto& c : chunks)
        if (c.word_count >= config.min_words && c.modal_count >= config.min_modals)
            out.push_back(c);
    return out;
}

// ---------------------------------------------------------------------------
// Pair generation backends
// ---------------------------------------------------------------------------

struct RawGeneration {
    std::string question;
    std::string answer;
    std::vector<std::string> witnesses;
};

class QaBackend {
public:
    virtual ~QaBackend() = default;
    virtual const char* name() const = 0;
    // May return nullopt on backend failure; failures are logged upstream.
    virtual std::optional<RawGeneration> generate(const EvalChunk& chunk) = 0;
};

// Prompt sent to the remote generation backend. Versioned; evaluation
// results are only comparable within one prompt version.
inline constexpr std::string_view kQaPromptVersion = "v1";
inline constexpr std::string_view kQaPromptTemplate =
    "You are given a passage from a technical standard.\n"
    "Write ONE question that the passage answers, then answer it concisely\n"
    "using only the passage. Quote the specific spans of the passage that\n"
    "support the answer, verbatim, as witnesses.\n"
    "Respond with JSON: {\"question\": ..., \"answer\": ..., \"witnesses\": [...]}.\n"
    "Passage:\n";

namespace detail {

// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    size_t b = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || is_space(text[i + 1]))) {
            std::string s = trim(text.substr(b, i + 1 - b));
            if (!s.empty()) out.push_back(std::move(s));
            b = i + 1;
        }
    }
    std::string tail = trim(text.substr(b));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

inline const std::unordered_set<std::string>& question_stopwords() {
    static const std::unordered_set<std::string> kStop = {
        "the", "a", "an", "of", "to", "and", "or", "in", "on", "for", "with", "by", "is",
        "are", "be", "been", "as", "at", "this", "that", "these", "those", "it", "its",
        "not", "any", "all", "than", "then", "when", "where", "which", "who", "whose",
        "from", "into", "under", "over", "after", "before", "between", "during", "such",
        "shall", "must", "should", "may", "can", "will", "might", "could", "would",
        "have", "has", "had", "do", "does", "done", "if", "each", "per", "also", "other",
        "no", "nor", "so", "only", "more", "most", "less", "least", "their", "there"};
    return kStop;
}

inline std::string strip_edge_punct(std::string_view w) {
    size_t b = 0, e = w.size();
    while (b < e && !is_alnum(w[b])) ++b;
    while (e > b && !is_alnum(w[e - 1])) --e;
    return std::string(w.substr(b, e - b));
}

}  // namespace detail

// Deterministic template backend: takes the first sentence containing a
// modal verb, asks about its first 8 non-stopword tokens, and quotes the
// sentence as the single witness. Exists so the whole evaluation loop is
// hermetic.
class OfflineTemplateBackend : public QaBackend {
public:
    const char* name() const override { return "offline_template"; }

    std::optional<RawGeneration> generate(const EvalChunk& chunk) override {
        for (const auto& sentence : detail::split_sentences(chunk.text)) {
            if (count_modals(sentence) == 0) continue;
            std::vector<std::string> topic;
            for (const auto& w : split_ws(sentence)) {
                std::string stripped = detail::strip_edge_punct(w);
                if (stripped.empty()) continue;
                if (detail::question_stopwords().count(to_lower(stripped))) continue;
                topic.push_back(stripped);
                if (topic.size() == 8) break;
            }
            RawGeneration g;
            g.question = "According to " + chunk.doc_id + ", what is required regarding: " +
                         join(topic, " ") + "?";
            g.answer = sentence;
            g.witnesses = {sentence};
            return g;
        }
        return std::nullopt;  // cannot happen for chunks that passed the modal filter
    }
};

// Wraps a backend call and enforces the witness invariant: every witness
// must occur in the source chunk (whitespace-normalized); otherwise the
// pair is discarded.
inline std::optional<QAPair> generate_pair(const EvalChunk& chunk, QaBackend& backend) {
    std::optional<RawGeneration> raw;
    try {
        raw = backend.generate(chunk);
    } catch (const std::exception& e) {
        log_warn(std::string("qa backend ") + backend.name() + " failed on " + chunk.doc_id + "/" +
                 std::to_string(chunk.ordinal) + ": " + e.what());
        return std::nullopt;
    }
    if (!raw) return std::nullopt;
    const std::string norm_chunk = normalize_ws(chunk.text);
    for (const auto& w : raw->witnesses) {
        if (w.empty() || norm_chunk.find(normalize_ws(w)) == std::string::npos) {
            log_warn("discarding pair: witness not found in source chunk (" + chunk.doc_id + "/" +
                     std::to_string(chunk.ordinal) + ")");
            return std::nullopt;
        }
    }
    QAPair pair;
    pair.question = std::move(raw->question);
    pair.answer = std::move(raw->answer);
    pair.source_doc = chunk.doc_id;
    pair.source_chunk = chunk.text;
    pair.witnesses = std::move(raw->witnesses);
    return pair;
}

// ---------------------------------------------------------------------------
// Dataset synthesis
// ---------------------------------------------------------------------------

struct SynthesisResult {
    std::vector<QAPair> pairs;
    size_t chunks_total = 0;
    size_t chunks_eligible = 0;
    size_t generation_failures = 0;
    std::vector<std::string> warnings;
};

// Chunks and filters every manifest document, samples sample_n chunks
// without replacement (seeded, hand-rolled so the bytes are identical on
// every platform), and generates one pair per sampled chunk.
inline SynthesisResult synthesize_dataset(const CorpusManifest& manifest,
                                          const SynthesisConfig& config, QaBackend& backend) {
    config.validate();
    SynthesisResult result;
    std::vector<EvalChunk> eligible;
    for (const auto& doc : manifest.documents) {
        auto chunks = flat_chunk(doc.doc_id, read_file(doc.path), config);
        result.chunks_total += chunks.size();
        for (auto& c : filter_chunks(chunks, config)) eligible.push_back(std::move(c));
    }
    result.chunks_eligible = eligible.size();

    size_t n = config.sample_n;
    if (eligible.size() < n) {
        result.warnings.push_back("only " + std::to_string(eligible.size()) +
                                  " eligible chunks for sample_n=" + std::to_string(n) +
                                  "; using all");
        log_warn(result.warnings.back());
        n = eligible.size();
    }

    // Partial Fisher-Yates; selection order is the dataset order.
    std::mt19937_64 rng(config.seed);
    std::vector<size_t> order(eligible.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = 0; i < n; ++i) {
        size_t j = i + static_cast<size_t>(rng() % (order.size() - i));
        std::swap(order[i], order[j]);
    }

    // Generation runs with bounded concurrency; assembly preserves the
    // sampled order regardless of completion order.
    std::vector<std::optional<QAPair>> generated(n);
    parallel_for(n, config.concurrency,
                 [&](size_t i) { generated[i] = generate_pair(eligible[order[i]], backend); });
    for (size_t i = 0; i < n; ++i) {
        if (!generated[i]) {
            ++result.generation_failures;
            continue;
        }
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "qa-%04zu", result.pairs.size() + 1);
        generated[i]->id = idbuf;
        result.pairs.push_back(std::move(*generated[i]));
    }
    return result;
}

// Keeps a pair iff every witness occurs (whitespace-normalized) in every
// index full text. Adding an index can only shrink the retained set.
inline std::vector<QAPair> filter_valid_pairs(const std::vector<QAPair>& pairs,
                                              const std::vector<std::string>& index_full_texts) {
    std::vector<std::string> norm_texts;
    norm_texts.reserve(index_full_texts.size());
    for (const auto& t : index_full_texts) norm_texts.push_back(normalize_ws(t));
    std::vector<QAPair> out;
    for (const auto& p : pairs) {
        bool ok = true;
        for (const auto& w : p.witnesses) {
            const std::string nw = normalize_ws(w);
            for (const auto& t : norm_texts) {
                if (t.find(nw) == std::string::npos) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (ok) out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL IO
// ---------------------------------------------------------------------------

inline nlohmann::json qa_pair_to_json(const QAPair& p) {
    return nlohmann::json{{"id", p.id},
                          {"question", p.question},
                          {"answer", p.answer},
                          {"source_doc", p.source_doc},
                          {"source_chunk", p.source_chunk},
                          {"witnesses", p.witnesses}};
}

inline QAPair qa_pair_from_json(const nlohmann::json& j) {
    QAPair p;
    p.id = j.at("id").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    p.source_doc = j.at("source_doc").get<std::string>();
    p.source_chunk = j.at("source_chunk").get<std::string>();
    p.witnesses = j.at("witnesses").get<std::vector<std::string>>();
    return p;
}

inline std::string qa_to_jsonl(const std::vector<QAPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += qa_pair_to_json(p).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<QAPair> qa_from_jsonl(const std::string& content) {
    std::vector<QAPair> out;
    size_t b = 0;
    for (size_t i = 0; i <= content.size(); ++i) {
        if (i == content.size() || content[i] == '\n') {
            std::string line = trim(std::string_view(content).substr(b, i - b));
            b = i + 1;
            if (line.empty()) continue;
            try {
                out.push_back(qa_pair_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw Error(std::string("bad qa jsonl line: ") + e.what());
            }
        }
    }
    return out;
}

}  // namespace normgraph
