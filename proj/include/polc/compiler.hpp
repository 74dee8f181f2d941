#pragma once

#include <atomic>
#include <compare>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "polc/corpus.hpp"
#include "polc/digest.hpp"
#include "polc/entailment.hpp"
#include "polc/errors.hpp"
#include "polc/retrieval.hpp"
#include "polc/translation.hpp"
#include "polc/truth_table.hpp"

namespace polc {

struct CompileOptions {
    int k = 10;                        // retrieval depth per atomic
    int max_tokens = kDefaultSegmentTokens;
    int max_in_flight = 4;             // worker bound for the fan-out
    bool use_llm_translation = false;  // default is the deterministic template
    std::vector<FewShotPair> few_shot; // only consulted in LLM translation mode
};

/// Everything that determines a cached verdict. A change to any field —
/// policy text, atomic, either backend, retrieval depth, or the prompt
/// layout — misses the cache.
struct VerdictKey {
    std::string policy_digest;
    std::string atomic_id;
    std::string embedder_id;
    std::string model_id;
    int k = 0;
    std::string prompt_version;

    auto operator<=>(const VerdictKey&) const = default;
};

/// File-backed verdict cache; makes compiles resumable and repeated runs
/// cheap. Safe for concurrent lookups and inserts.
class VerdictCache {
public:
    VerdictCache() = default;
    VerdictCache(VerdictCache&& other) noexcept {
        std::lock_guard<std::mutex> lock(other.mutex_);
        entries_ = std::move(other.entries_);
    }
    VerdictCache& operator=(VerdictCache&& other) noexcept {
        if (this != &other) {
            std::scoped_lock lock(mutex_, other.mutex_);
            entries_ = std::move(other.entries_);
        }
        return *this;
    }

    std::optional<TableEntry> get(const VerdictKey& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void put(const VerdictKey& key, TableEntry entry) {
        std::lock_guard<std::mutex> lock(mutex_);
        entries_[key] = std::move(entry);
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return entries_.size();
    }

    static VerdictCache load_file(const std::filesystem::path& path) {
        Json doc;
        try {
            doc = Json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
            throw SchemaError(path.string(), "expected an object with an \"entries\" array");
        }
        VerdictCache cache;
        for (const Json& row : doc["entries"]) {
            VerdictKey key;
            key.policy_digest = row.at("policy_digest").get<std::string>();
            key.atomic_id = row.at("atomic_id").get<std::string>();
            key.embedder_id = row.at("embedder_id").get<std::string>();
            key.model_id = row.at("model_id").get<std::string>();
            key.k = row.at("k").get<int>();
            key.prompt_version = row.at("prompt_version").get<std::string>();
            TableEntry entry;
            entry.value = row.at("value").get<bool>();
            entry.evidence = row.at("evidence").get<std::vector<int>>();
            entry.raw_response_digest = row.at("raw_response_digest").get<std::string>();
            cache.entries_[key] = std::move(entry);
        }
        return cache;
    }

    void save_file(const std::filesystem::path& path) const {
        Json rows = Json::array();
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& [key, entry] : entries_) {
            Json row;
            row["policy_digest"] = key.policy_digest;
            row["atomic_id"] = key.atomic_id;
            row["embedder_id"] = key.embedder_id;
            row["model_id"] = key.model_id;
            row["k"] = key.k;
            row["prompt_version"] = key.prompt_version;
            row["value"] = entry.value;
            row["evidence"] = entry.evidence;
            row["raw_response_digest"] = entry.raw_response_digest;
            rows.push_back(std::move(row));
        }
        Json doc;
        doc["format_version"] = 1;
        doc["entries"] = std::move(rows);
        write_file(path, doc.dump(2) + "\n");
    }

private:
    std::map<VerdictKey, TableEntry> entries_;
    mutable std::mutex mutex_;
};

struct FailedAtomic {
    std::string id;
    std::string error;
};

/// What happened during one policy compile. Failed atomics are reported, not
/// defaulted — a missing entry is visible downstream as a hard error.
struct CompileReport {
    std::string policy_id;
    int segments = 0;
    int atomics = 0;
    int entailment_calls = 0;       // backend completions actually made (cache misses)
    int translation_calls = 0;      // LLM translation completions actually made
    int dropped_evidence_ids = 0;   // cited ids outside the retrieved context
    std::size_t utf8_replacements = 0;
    std::vector<FailedAtomic> failed;
    std::string error;              // whole-policy failure (batch isolation)

    bool ok() const { return error.empty() && failed.empty(); }
};

struct CompileResult {
    TruthTable table;
    CompileReport report;
};

namespace detail {

/// Runs fn(0..count-1) on up to `workers` threads. fn must not throw.
/// Results keyed by index stay deterministic regardless of the worker count.
template <typename Fn>
inline void parallel_for(int count, int workers, Fn&& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto run = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(run);
    for (auto& thread : threads) thread.join();
}

}  // namespace detail

/// Compiles one policy into its truth table: segment and index once, then per
/// atomic formula translate -> retrieve top-k -> widen with neighbors ->
/// entail. Per-atomic failures land in the report; everything else in the
/// table. Deterministic for fixed inputs and backends, independent of
/// max_in_flight.
inline CompileResult compile_policy(const PolicyDocument& policy,
                                    const std::vector<AtomicFormula>& atomics,
                                    const Taxonomy& taxonomy, EmbedderBackend& embedder,
                                    ChatBackend& chat, const CompileOptions& options = {},
                                    VerdictCache* verdict_cache = nullptr,
                                    TranslationCache* translation_cache = nullptr) {
    CompileResult result;
    TruthTable& table = result.table;
    CompileReport& report = result.report;
    table.policy_id = policy.policy_id;
    table.taxonomy_fingerprint = taxonomy.fingerprint();
    table.backend_id = chat.id();
    table.embedder_id = embedder.id();
    table.k = options.k;
    report.policy_id = policy.policy_id;
    report.atomics = static_cast<int>(atomics.size());
    report.utf8_replacements = policy.utf8_replacements;

    try {
        if (options.k < 1) throw Error("retrieval depth k must be at least 1");
        if (policy.text.empty()) {
            throw IngestError("policy \"" + policy.policy_id + "\" has no text");
        }
        const std::vector<Segment> segments = segment_document(policy, options.max_tokens);
        report.segments = static_cast<int>(segments.size());
        const VectorIndex index = build_index(segments, embedder);
        const std::string policy_digest = content_digest(policy.text);
        const int total = static_cast<int>(atomics.size());

        std::vector<std::optional<TableEntry>> entries(static_cast<std::size_t>(total));
        std::vector<std::string> errors(static_cast<std::size_t>(total));
        std::atomic<int> entailment_calls{0};
        std::atomic<int> translation_calls{0};
        std::atomic<int> dropped_evidence{0};

        detail::parallel_for(total, options.max_in_flight, [&](int i) {
            const AtomicFormula& atomic = atomics[static_cast<std::size_t>(i)];
            try {
                const VerdictKey key{policy_digest,  atomic.id,  embedder.id(),
                                     chat.id(),      options.k,  std::string(kEntailmentPromptVersion)};
                if (verdict_cache) {
                    if (auto cached = verdict_cache->get(key)) {
                        entries[static_cast<std::size_t>(i)] = std::move(*cached);
                        return;
                    }
                }
                int llm_calls = 0;
                const Statement statement =
                    options.use_llm_translation
                        ? translate_llm(atomic, taxonomy, chat, translation_cache,
                                        options.few_shot, &llm_calls)
                        : translate_template(atomic, taxonomy);
                translation_calls.fetch_add(llm_calls);
                const std::vector<ScoredSegment> ranked =
                    retrieve(index, statement.text, options.k, embedder);
                std::vector<int> hits;
                hits.reserve(ranked.size());
                for (const ScoredSegment& hit : ranked) hits.push_back(hit.segment);
                const std::vector<int> context_indices =
                    expand_neighbors(hits, static_cast<int>(segments.size()));
                EntailmentQuery query;
                query.hypothesis = statement.text;
                for (int segment : context_indices) {
                    query.context.emplace_back(segment,
                                               segments[static_cast<std::size_t>(segment)].text);
                }
                const Verdict verdict = entail(chat, query);
                entailment_calls.fetch_add(1);
                dropped_evidence.fetch_add(verdict.dropped_evidence);
                TableEntry entry;
                entry.value = verdict.value;
                entry.evidence = verdict.evidence;
                entry.raw_response_digest = content_digest(verdict.raw);
                if (verdict_cache) verdict_cache->put(key, entry);
                entries[static_cast<std::size_t>(i)] = std::move(entry);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        });

        report.entailment_calls = entailment_calls.load();
        report.translation_calls = translation_calls.load();
        report.dropped_evidence_ids = dropped_evidence.load();
        for (int i = 0; i < total; ++i) {
            const AtomicFormula& atomic = atomics[static_cast<std::size_t>(i)];
            if (entries[static_cast<std::size_t>(i)]) {
                table.entries[atomic.id] = std::move(*entries[static_cast<std::size_t>(i)]);
            } else {
                report.failed.push_back({atomic.id, errors[static_cast<std::size_t>(i)]});
            }
        }
    } catch (const std::exception& e) {
        report.error = e.what();
    }
    return result;
}

/// Batch compile with bounded fan-out across policies. One result per input
/// policy, in input order; a failing policy is isolated in its own report.
inline std::vector<CompileResult> compile_batch(const std::vector<PolicyDocument>& policies,
                                                const std::vector<AtomicFormula>& atomics,
                                                const Taxonomy& taxonomy,
                                                EmbedderBackend& embedder, ChatBackend& chat,
                                                const CompileOptions& options = {},
                                                VerdictCache* verdict_cache = nullptr,
                                                TranslationCache* translation_cache = nullptr) {
    std::vector<CompileResult> results(policies.size());
    CompileOptions per_policy = options;
    per_policy.max_in_flight = 1;  // the batch level owns the worker bound
    detail::parallel_for(static_cast<int>(policies.size()), options.max_in_flight, [&](int i) {
        results[static_cast<std::size_t>(i)] =
            compile_policy(policies[static_cast<std::size_t>(i)], atomics, taxonomy, embedder, chat,
                           per_policy, verdict_cache, translation_cache);
    });
    return results;
}

inline Json to_json(const CompileReport& report) {
    Json doc;
    doc["format_version"] = 1;
    doc["policy_id"] = report.policy_id;
    doc["segments"] = report.segments;
    doc["atomics"] = report.atomics;
    doc["entailment_calls"] = report.entailment_calls;
    doc["translation_calls"] = report.translation_calls;
    doc["dropped_evidence_ids"] = report.dropped_evidence_ids;
    doc["utf8_replacements"] = report.utf8_replacements;
    Json failed = Json::array();
    for (const FailedAtomic& failure : report.failed) {
        Json row;
        row["id"] = failure.id;
        row["error"] = failure.error;
        failed.push_back(std::move(row));
    }
    doc["failed_atomics"] = std::move(failed);
    doc["error"] = report.error;
    doc["ok"] = report.ok();
    return doc;
}

}  // namespace polc
