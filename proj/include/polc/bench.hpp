#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polc/corpus.hpp"
#include "polc/entailment.hpp"
#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"
#include "polc/text.hpp"

namespace polc {

/// A benchmark case: a short statement about a policy, used directly as the
/// entailment hypothesis.
struct BenchCase {
    std::string case_id;
    std::string statement;
};

/// Ground truth: `case_id` holds for `policy_id`; the optional excerpt quotes
/// the supporting passage verbatim.
struct Annotation {
    std::string policy_id;
    std::string case_id;
    std::string excerpt;
};

/// Two cases that cannot both hold for one policy. Each annotated positive of
/// one member yields a manufactured negative of the other.
struct ContrastPair {
    std::string case_id_a;
    std::string case_id_b;
};

struct EvalInstance {
    std::string policy_id;
    std::string case_id;
    std::string statement;
    bool label = false;
    std::string excerpt;  // only meaningful on positives
};

inline std::vector<BenchCase> load_cases(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("cases") || !doc["cases"].is_array()) {
        throw SchemaError(path.string(), "expected an object with a \"cases\" array");
    }
    std::vector<BenchCase> cases;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc["cases"].size(); ++i) {
        const Json& row = doc["cases"][i];
        const std::string p = "cases[" + std::to_string(i) + "]";
        if (!row.is_object() || !row.contains("case_id") || !row["case_id"].is_string() ||
            !row.contains("statement") || !row["statement"].is_string()) {
            throw SchemaError(p, "expected {case_id, statement} strings");
        }
        BenchCase entry{row["case_id"].get<std::string>(), row["statement"].get<std::string>()};
        if (entry.case_id.empty() || entry.statement.empty()) {
            throw SchemaError(p, "case_id and statement must be nonempty");
        }
        if (!seen.insert(entry.case_id).second) {
            throw SchemaError(p + ".case_id", "duplicate case id \"" + entry.case_id + "\"");
        }
        cases.push_back(std::move(entry));
    }
    return cases;
}

inline std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("annotations") || !doc["annotations"].is_array()) {
        throw SchemaError(path.string(), "expected an object with an \"annotations\" array");
    }
    std::vector<Annotation> annotations;
    for (std::size_t i = 0; i < doc["annotations"].size(); ++i) {
        const Json& row = doc["annotations"][i];
        const std::string p = "annotations[" + std::to_string(i) + "]";
        if (!row.is_object() || !row.contains("policy_id") || !row["policy_id"].is_string() ||
            !row.contains("case_id") || !row["case_id"].is_string()) {
            throw SchemaError(p, "expected {policy_id, case_id[, excerpt]} ");
        }
        Annotation annotation;
        annotation.policy_id = row["policy_id"].get<std::string>();
        annotation.case_id = row["case_id"].get<std::string>();
        if (row.contains("excerpt")) {
            if (!row["excerpt"].is_string()) throw SchemaError(p + ".excerpt", "not a string");
            annotation.excerpt = row["excerpt"].get<std::string>();
        }
        annotations.push_back(std::move(annotation));
    }
    return annotations;
}

inline std::vector<ContrastPair> load_pairs(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array()) {
        throw SchemaError(path.string(), "expected an object with a \"pairs\" array");
    }
    std::vector<ContrastPair> pairs;
    for (std::size_t i = 0; i < doc["pairs"].size(); ++i) {
        const Json& row = doc["pairs"][i];
        const std::string p = "pairs[" + std::to_string(i) + "]";
        if (!row.is_object() || !row.contains("case_id_a") || !row["case_id_a"].is_string() ||
            !row.contains("case_id_b") || !row["case_id_b"].is_string()) {
            throw SchemaError(p, "expected {case_id_a, case_id_b} strings");
        }
        pairs.push_back({row["case_id_a"].get<std::string>(), row["case_id_b"].get<std::string>()});
    }
    return pairs;
}

struct EvalSetOptions {
    std::optional<int> sample_positives;  // keep at most this many positives
    std::uint64_t seed = 0;               // sampling seed
};

struct EvalSet {
    std::vector<EvalInstance> instances;   // positives first, then manufactured negatives
    int skipped_contradictions = 0;        // negatives dropped because the dataset marks them positive
};

namespace detail {

/// Deterministic bounded draw; avoids std::uniform_int_distribution, whose
/// output is implementation-defined.
inline std::uint64_t bounded_draw(std::uint64_t& state, std::uint64_t bound) {
    // xorshift64* — deterministic everywhere, plenty for sampling fixtures.
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return (state * 2685821657736338717ULL) % bound;
}

}  // namespace detail

/// Builds the evaluation set: every annotation is a positive; every positive
/// whose case belongs to a contrast pair manufactures a negative of the
/// opposite case for the same policy. Annotated datasets only contain
/// positives — the pairs are what make a balanced benchmark possible.
inline EvalSet build_eval_set(const std::vector<BenchCase>& cases,
                              const std::vector<Annotation>& annotations,
                              const std::vector<ContrastPair>& pairs,
                              const EvalSetOptions& options = {}) {
    std::map<std::string, const BenchCase*> by_id;
    for (const BenchCase& entry : cases) by_id[entry.case_id] = &entry;

    std::map<std::string, std::string> counterpart;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const ContrastPair& pair = pairs[i];
        const std::string p = "pairs[" + std::to_string(i) + "]";
        if (!by_id.count(pair.case_id_a) || !by_id.count(pair.case_id_b)) {
            throw SchemaError(p, "pair references unknown case id (\"" + pair.case_id_a +
                                     "\", \"" + pair.case_id_b + "\")");
        }
        if (pair.case_id_a == pair.case_id_b) {
            throw SchemaError(p, "a case cannot contrast with itself");
        }
        if (counterpart.count(pair.case_id_a) || counterpart.count(pair.case_id_b)) {
            throw SchemaError(p, "a case may appear in at most one contrast pair");
        }
        counterpart[pair.case_id_a] = pair.case_id_b;
        counterpart[pair.case_id_b] = pair.case_id_a;
    }

    std::set<std::pair<std::string, std::string>> positive_keys;
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        const Annotation& annotation = annotations[i];
        if (!by_id.count(annotation.case_id)) {
            throw SchemaError("annotations[" + std::to_string(i) + "].case_id",
                              "unknown case id \"" + annotation.case_id + "\"");
        }
        positive_keys.insert({annotation.policy_id, annotation.case_id});
    }

    // Optional seeded down-sampling of the positives, order-preserving.
    std::vector<const Annotation*> kept;
    kept.reserve(annotations.size());
    for (const Annotation& annotation : annotations) kept.push_back(&annotation);
    if (options.sample_positives && static_cast<std::size_t>(*options.sample_positives) < kept.size()) {
        const std::size_t want = static_cast<std::size_t>(*options.sample_positives);
        std::uint64_t state = options.seed ^ 0x9E3779B97F4A7C15ULL;
        if (state == 0) state = 0x9E3779B97F4A7C15ULL;
        std::vector<std::size_t> indices(kept.size());
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        for (std::size_t i = 0; i < want; ++i) {  // partial Fisher-Yates
            const std::size_t j =
                i + static_cast<std::size_t>(detail::bounded_draw(state, indices.size() - i));
            std::swap(indices[i], indices[j]);
        }
        indices.resize(want);
        std::sort(indices.begin(), indices.end());
        std::vector<const Annotation*> sampled;
        sampled.reserve(want);
        for (std::size_t index : indices) sampled.push_back(kept[index]);
        kept = std::move(sampled);
    }

    EvalSet out;
    std::set<std::pair<std::string, std::string>> emitted;
    for (const Annotation* annotation : kept) {
        if (!emitted.insert({annotation->policy_id, annotation->case_id}).second) continue;
        EvalInstance instance;
        instance.policy_id = annotation->policy_id;
        instance.case_id = annotation->case_id;
        instance.statement = by_id.at(annotation->case_id)->statement;
        instance.label = true;
        instance.excerpt = annotation->excerpt;
        out.instances.push_back(std::move(instance));
    }
    for (const Annotation* annotation : kept) {
        const auto it = counterpart.find(annotation->case_id);
        if (it == counterpart.end()) continue;
        const std::string& negative_case = it->second;
        if (positive_keys.count({annotation->policy_id, negative_case})) {
            // The dataset marks both members true for this policy; manufacturing
            // a negative would contradict the ground truth.
            ++out.skipped_contradictions;
            continue;
        }
        if (!emitted.insert({annotation->policy_id, negative_case}).second) continue;
        EvalInstance instance;
        instance.policy_id = annotation->policy_id;
        instance.case_id = negative_case;
        instance.statement = by_id.at(negative_case)->statement;
        instance.label = false;
        out.instances.push_back(std::move(instance));
    }
    return out;
}

/// What the pipeline produced for one instance: the verdict (absent when the
/// response was unparseable) and the context segment indices shown to the
/// backend.
struct PipelineResult {
    std::optional<Verdict> verdict;
    std::vector<int> context;
    std::string error;
};

/// (policy id, statement) -> PipelineResult. May throw VerdictError, which
/// run_eval counts as unparseable.
using Pipeline = std::function<PipelineResult(const std::string&, const std::string&)>;

struct Metrics {
    int tp = 0;
    int fp = 0;
    int false_negatives = 0;
    int tn = 0;
    int unparseable = 0;
    std::optional<double> precision;  // undefined when tp + fp == 0
    std::optional<double> recall;     // undefined when tp + fn == 0
    std::optional<double> f1;         // undefined when either side is
};

inline Metrics compute_metrics(int tp, int fp, int false_negatives, int tn, int unparseable = 0) {
    Metrics metrics;
    metrics.tp = tp;
    metrics.fp = fp;
    metrics.false_negatives = false_negatives;
    metrics.tn = tn;
    metrics.unparseable = unparseable;
    if (tp + fp > 0) metrics.precision = static_cast<double>(tp) / (tp + fp);
    if (tp + false_negatives > 0) metrics.recall = static_cast<double>(tp) / (tp + false_negatives);
    if (metrics.precision && metrics.recall) {
        const double sum = *metrics.precision + *metrics.recall;
        metrics.f1 = sum == 0.0 ? 0.0 : 2.0 * *metrics.precision * *metrics.recall / sum;
    }
    return metrics;
}

struct EvalRun {
    Metrics metrics;
    std::vector<PipelineResult> outcomes;  // aligned with the instance list
};

/// Runs the pipeline over every instance. Positives predicted true are tp,
/// negatives predicted true are fp, and so on; unparseable responses are
/// counted separately and excluded from the confusion counts.
inline EvalRun run_eval(const std::vector<EvalInstance>& instances, const Pipeline& pipeline) {
    EvalRun run;
    int tp = 0, fp = 0, false_negatives = 0, tn = 0, unparseable = 0;
    for (const EvalInstance& instance : instances) {
        PipelineResult outcome;
        try {
            outcome = pipeline(instance.policy_id, instance.statement);
        } catch (const VerdictError& e) {
            outcome.error = e.what();
        }
        if (!outcome.verdict) {
            ++unparseable;
            run.outcomes.push_back(std::move(outcome));
            continue;
        }
        const bool predicted = outcome.verdict->value;
        if (instance.label && predicted) ++tp;
        else if (!instance.label && predicted) ++fp;
        else if (instance.label && !predicted) ++false_negatives;
        else ++tn;
        run.outcomes.push_back(std::move(outcome));
    }
    run.metrics = compute_metrics(tp, fp, false_negatives, tn, unparseable);
    return run;
}

/// Segments (by index) whose text overlaps the excerpt. Matching is
/// whitespace- and case-insensitive; an excerpt straddling a boundary yields
/// every overlapped segment. Empty result: the excerpt is not in the policy.
inline std::set<int> locate_excerpt(const std::string& excerpt,
                                    const std::vector<Segment>& segments) {
    const std::string needle = normalize_for_match(excerpt);
    if (needle.empty()) return {};
    std::string joined;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end) per segment
    for (const Segment& segment : segments) {
        if (!joined.empty()) joined += ' ';
        const std::size_t begin = joined.size();
        joined += normalize_for_match(segment.text);
        spans.emplace_back(begin, joined.size());
    }
    const std::size_t pos = joined.find(needle);
    if (pos == std::string::npos) return {};
    const std::size_t end = pos + needle.size();
    std::set<int> hits;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (spans[i].first < end && pos < spans[i].second) {
            hits.insert(segments[i].index);
        }
    }
    return hits;
}

struct EvidenceRecallReport {
    int hits = 0;         // positives whose cited evidence includes an excerpt segment
    int eligible = 0;     // positives whose excerpt segment made it into the context
    int unlocatable = 0;  // excerpts not found in their policy text
    std::optional<double> fraction;
};

/// Fraction of positives whose verdict cites the excerpt-bearing segment,
/// among those where retrieval actually put that segment in front of the
/// backend. Retrieval misses are a separate failure and excluded here.
inline EvidenceRecallReport evidence_recall(
    const std::vector<EvalInstance>& instances, const std::vector<PipelineResult>& outcomes,
    const std::map<std::string, std::vector<Segment>>& segments_by_policy) {
    if (instances.size() != outcomes.size()) {
        throw Error("instance and outcome lists differ in length");
    }
    EvidenceRecallReport report;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const EvalInstance& instance = instances[i];
        if (!instance.label || instance.excerpt.empty()) continue;
        const auto segments = segments_by_policy.find(instance.policy_id);
        if (segments == segments_by_policy.end()) {
            throw Error("no segments for policy \"" + instance.policy_id + "\"");
        }
        const std::set<int> excerpt_segments = locate_excerpt(instance.excerpt, segments->second);
        if (excerpt_segments.empty()) {
            ++report.unlocatable;
            continue;
        }
        const PipelineResult& outcome = outcomes[i];
        if (!outcome.verdict) continue;
        const bool in_context = std::any_of(outcome.context.begin(), outcome.context.end(),
                                            [&](int s) { return excerpt_segments.count(s) > 0; });
        if (!in_context) continue;
        ++report.eligible;
        const bool cited =
            std::any_of(outcome.verdict->evidence.begin(), outcome.verdict->evidence.end(),
                        [&](int s) { return excerpt_segments.count(s) > 0; });
        if (cited) ++report.hits;
    }
    if (report.eligible > 0) {
        report.fraction = static_cast<double>(report.hits) / report.eligible;
    }
    return report;
}

inline Json to_json(const Metrics& metrics) {
    Json doc;
    doc["tp"] = metrics.tp;
    doc["fp"] = metrics.fp;
    doc["fn"] = metrics.false_negatives;
    doc["tn"] = metrics.tn;
    doc["unparseable"] = metrics.unparseable;
    doc["precision"] = metrics.precision ? Json(*metrics.precision) : Json();
    doc["recall"] = metrics.recall ? Json(*metrics.recall) : Json();
    doc["f1"] = metrics.f1 ? Json(*metrics.f1) : Json();
    return doc;
}

inline Json to_json(const EvidenceRecallReport& report) {
    Json doc;
    doc["hits"] = report.hits;
    doc["eligible"] = report.eligible;
    doc["unlocatable"] = report.unlocatable;
    doc["fraction"] = report.fraction ? Json(*report.fraction) : Json();
    return doc;
}

}  // namespace polc
