#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "polc/corpus.hpp"
#include "polc/digest.hpp"
#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"
#include "polc/text.hpp"

namespace polc {

/// Produces L2-normalized embeddings. Implementations must be deterministic
/// per (id, text) and safe to call from multiple threads.
class EmbedderBackend {
public:
    virtual ~EmbedderBackend() = default;
    virtual std::string id() const = 0;
    virtual int dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) = 0;
};

namespace detail {

/// Normalizes to unit L2 norm; the zero vector maps to the first basis vector
/// so that every embedding has a well-defined direction.
inline void l2_normalize(std::vector<double>& vec) {
    double sum_squares = 0.0;
    for (double component : vec) sum_squares += component * component;
    if (sum_squares == 0.0) {
        if (!vec.empty()) vec[0] = 1.0;
        return;
    }
    const double norm = std::sqrt(sum_squares);
    for (double& component : vec) component /= norm;
}

/// Embedding token: whitespace-delimited run, ASCII-lowercased, stripped of
/// leading/trailing non-alphanumeric bytes. Empty results are skipped.
inline std::string embedding_token(std::string_view raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && !is_ascii_alnum(raw[begin])) ++begin;
    while (end > begin && !is_ascii_alnum(raw[end - 1])) --end;
    return lower_ascii(raw.substr(begin, end - begin));
}

}  // namespace detail

/// Deterministic mock embedder: a hashed bag of words. Each token lands in
/// bucket fnv1a64(token) % dimension; bucket counts are L2-normalized. Crude,
/// but honest about order-insensitivity and good enough to exercise ranking.
class BagOfWordsEmbedder final : public EmbedderBackend {
public:
    explicit BagOfWordsEmbedder(int dimension) : dimension_(dimension) {
        if (dimension < 1) throw Error("embedder dimension must be at least 1");
    }

    std::string id() const override { return "mock-bow-" + std::to_string(dimension_); }
    int dimension() const override { return dimension_; }

    std::vector<double> embed(std::string_view text) override {
        std::vector<double> vec(static_cast<std::size_t>(dimension_), 0.0);
        for (std::string_view raw : whitespace_tokens(text)) {
            const std::string token = detail::embedding_token(raw);
            if (token.empty()) continue;
            vec[fnv1a64(token) % static_cast<std::uint64_t>(dimension_)] += 1.0;
        }
        detail::l2_normalize(vec);
        return vec;
    }

private:
    int dimension_;
};

inline constexpr std::string_view kVectorIndexMagic = "polc-vector-index";
inline constexpr int kVectorIndexFormatVersion = 1;

/// One embedding row per segment, keyed by segment index.
struct VectorIndex {
    std::string embedder_id;
    int dimension = 0;
    std::map<int, std::vector<double>> rows;

    bool operator==(const VectorIndex& other) const {
        return embedder_id == other.embedder_id && dimension == other.dimension &&
               rows == other.rows;
    }
};

inline VectorIndex build_index(const std::vector<Segment>& segments, EmbedderBackend& embedder) {
    VectorIndex index;
    index.embedder_id = embedder.id();
    index.dimension = embedder.dimension();
    for (const Segment& segment : segments) {
        if (index.rows.count(segment.index)) {
            throw Error("duplicate segment index " + std::to_string(segment.index));
        }
        index.rows[segment.index] = embedder.embed(segment.text);
    }
    return index;
}

inline Json index_to_json(const VectorIndex& index) {
    Json doc;
    doc["magic"] = kVectorIndexMagic;
    doc["format_version"] = kVectorIndexFormatVersion;
    doc["embedder_id"] = index.embedder_id;
    doc["dimension"] = index.dimension;
    doc["count"] = index.rows.size();
    Json rows = Json::array();
    for (const auto& [segment, components] : index.rows) {
        Json row;
        row["segment"] = segment;
        row["components"] = components;
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    return doc;
}

inline void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    write_file(path, index_to_json(index).dump(2) + "\n");
}

inline VectorIndex load_index(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("magic") || doc["magic"] != kVectorIndexMagic) {
        throw SchemaError(path.string(), "not a vector index file (magic mismatch)");
    }
    if (!doc.contains("format_version") || doc["format_version"] != kVectorIndexFormatVersion) {
        throw SchemaError(path.string(), "unsupported vector index format version");
    }
    VectorIndex index;
    index.embedder_id = doc.at("embedder_id").get<std::string>();
    index.dimension = doc.at("dimension").get<int>();
    for (const auto& row : doc.at("rows")) {
        const int segment = row.at("segment").get<int>();
        std::vector<double> components = row.at("components").get<std::vector<double>>();
        if (static_cast<int>(components.size()) != index.dimension) {
            throw SchemaError(path.string(), "row dimension mismatch at segment " +
                                                 std::to_string(segment));
        }
        if (!index.rows.emplace(segment, std::move(components)).second) {
            throw SchemaError(path.string(), "duplicate segment index " + std::to_string(segment));
        }
    }
    if (index.rows.size() != doc.at("count").get<std::size_t>()) {
        throw SchemaError(path.string(), "row count does not match header");
    }
    return index;
}

struct ScoredSegment {
    int segment = 0;
    double score = 0.0;

    bool operator==(const ScoredSegment& other) const {
        return segment == other.segment && score == other.score;
    }
};

/// Exact top-k by cosine similarity (vectors are unit length, so the dot
/// product is the cosine). Full scan, descending score, ties broken by
/// ascending segment index. k larger than the index returns everything.
inline std::vector<ScoredSegment> retrieve(const VectorIndex& index, std::string_view query, int k,
                                           EmbedderBackend& embedder) {
    if (k < 1) throw Error("retrieval depth k must be at least 1");
    if (embedder.id() != index.embedder_id) {
        throw Error("index was built with embedder \"" + index.embedder_id +
                    "\" but queried with \"" + embedder.id() + "\"");
    }
    const std::vector<double> query_vec = embedder.embed(query);
    if (static_cast<int>(query_vec.size()) != index.dimension) {
        throw Error("query embedding dimension mismatch");
    }
    std::vector<ScoredSegment> scored;
    scored.reserve(index.rows.size());
    for (const auto& [segment, components] : index.rows) {
        double dot = 0.0;
        for (std::size_t i = 0; i < components.size(); ++i) dot += components[i] * query_vec[i];
        scored.push_back({segment, dot});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredSegment& a, const ScoredSegment& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.segment < b.segment;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

/// Widens a ranked hit list with each hit's immediate neighbors (i-1, i, i+1,
/// clamped to [0, total_segments)), deduplicated, ascending. Entailment
/// context benefits from the sentences around a hit.
inline std::vector<int> expand_neighbors(const std::vector<int>& ranked, int total_segments) {
    std::vector<int> out;
    for (int segment : ranked) {
        if (segment < 0 || segment >= total_segments) {
            throw Error("segment index " + std::to_string(segment) + " out of range");
        }
        for (int neighbor = segment - 1; neighbor <= segment + 1; ++neighbor) {
            if (neighbor >= 0 && neighbor < total_segments) out.push_back(neighbor);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace polc
