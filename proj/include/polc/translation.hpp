#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "polc/entailment.hpp"
#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"
#include "polc/taxonomy.hpp"
#include "polc/text.hpp"

namespace polc {

/// Natural-language rendering of one atomic formula, used as the entailment
/// hypothesis and as the retrieval query.
struct Statement {
    std::string atomic_id;
    std::string text;
};

/// Deterministic template translation — the default and the CI path. One
/// clause per bound attribute, in taxonomy order, quoting the value and
/// carrying its description so the statement is self-contained.
inline Statement translate_template(const AtomicFormula& atomic, const Taxonomy& taxonomy) {
    validate_atomic(taxonomy, atomic);
    std::string text = "The " + atomic.category + " practice satisfies: ";
    const Category* category = taxonomy.find_category(atomic.category);
    for (std::size_t i = 0; i < atomic.bindings.size(); ++i) {
        const auto& [attribute_name, value_name] = atomic.bindings[i];
        const Attribute* attribute = category->find_attribute(attribute_name);
        const AttributeValue* value = attribute->find_value(value_name);
        if (i > 0) text += "; ";
        text += attribute_name + " is \"" + value_name + "\" (" + value->description + ")";
    }
    return {atomic.id, std::move(text)};
}

inline constexpr std::string_view kTranslatorSystemPrompt =
    "You are a privacy policy expert. A privacy setting consists of a combination of attributes. "
    "Each of these has an associated value, along with a description of what that value means. "
    "You have to construct a concise statement that describes the setting. Only output the "
    "statement.";

/// The user message of the LLM translation prompt: one line per bound
/// attribute, in taxonomy order.
inline std::string translation_user_message(const AtomicFormula& atomic, const Taxonomy& taxonomy) {
    validate_atomic(taxonomy, atomic);
    const Category* category = taxonomy.find_category(atomic.category);
    std::string message;
    for (std::size_t i = 0; i < atomic.bindings.size(); ++i) {
        const auto& [attribute_name, value_name] = atomic.bindings[i];
        const Attribute* attribute = category->find_attribute(attribute_name);
        const AttributeValue* value = attribute->find_value(value_name);
        if (i > 0) message += '\n';
        message += "Attribute: " + attribute_name + ", Value: " + value_name +
                   ", Description: " + value->description;
    }
    return message;
}

/// Worked input/output example prepended to the LLM translation prompt.
struct FewShotPair {
    std::string input;
    std::string output;
};

inline std::vector<FewShotPair> load_fewshot_pairs(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array()) {
        throw SchemaError(path.string(), "expected an object with a \"pairs\" array");
    }
    std::vector<FewShotPair> pairs;
    for (std::size_t i = 0; i < doc["pairs"].size(); ++i) {
        const Json& pair = doc["pairs"][i];
        const std::string path_i = "pairs[" + std::to_string(i) + "]";
        if (!pair.is_object() || !pair.contains("input") || !pair["input"].is_string() ||
            !pair.contains("output") || !pair["output"].is_string()) {
            throw SchemaError(path_i, "expected {input, output} strings");
        }
        pairs.push_back({pair["input"].get<std::string>(), pair["output"].get<std::string>()});
    }
    return pairs;
}

/// File-backed statement cache keyed by (atomic id, taxonomy fingerprint,
/// translation mode, model id). Safe for concurrent lookups and inserts.
class TranslationCache {
public:
    using Key = std::tuple<std::string, std::string, std::string, std::string>;

    TranslationCache() = default;
    TranslationCache(TranslationCache&& other) noexcept {
        std::lock_guard<std::mutex> lock(other.mutex_);
        entries_ = std::move(other.entries_);
    }
    TranslationCache& operator=(TranslationCache&& other) noexcept {
        if (this != &other) {
            std::scoped_lock lock(mutex_, other.mutex_);
            entries_ = std::move(other.entries_);
        }
        return *this;
    }

    std::optional<std::string> get(const Key& key) const {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void put(const Key& key, std::string text) {
        std::lock_guard<std::mutex> lock(mutex_);
        entries_[key] = std::move(text);
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return entries_.size();
    }

    static TranslationCache load_file(const std::filesystem::path& path) {
        Json doc;
        try {
            doc = Json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
        }
        TranslationCache cache;
        if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
            throw SchemaError(path.string(), "expected an object with an \"entries\" array");
        }
        for (const Json& row : doc["entries"]) {
            cache.entries_[{row.at("atomic_id").get<std::string>(),
                            row.at("taxonomy_fingerprint").get<std::string>(),
                            row.at("mode").get<std::string>(),
                            row.at("model_id").get<std::string>()}] =
                row.at("text").get<std::string>();
        }
        return cache;
    }

    void save_file(const std::filesystem::path& path) const {
        Json rows = Json::array();
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& [key, text] : entries_) {
            Json row;
            row["atomic_id"] = std::get<0>(key);
            row["taxonomy_fingerprint"] = std::get<1>(key);
            row["mode"] = std::get<2>(key);
            row["model_id"] = std::get<3>(key);
            row["text"] = text;
            rows.push_back(std::move(row));
        }
        Json doc;
        doc["format_version"] = 1;
        doc["entries"] = std::move(rows);
        write_file(path, doc.dump(2) + "\n");
    }

private:
    std::map<Key, std::string> entries_;
    mutable std::mutex mutex_;
};

/// LLM translation: the translator system prompt, optional few-shot pairs as
/// alternating user/assistant turns, then the attribute listing. Responses
/// are cached; `backend_calls`, when given, counts actual completions.
inline Statement translate_llm(const AtomicFormula& atomic, const Taxonomy& taxonomy,
                               ChatBackend& backend, TranslationCache* cache = nullptr,
                               const std::vector<FewShotPair>& few_shot = {},
                               int* backend_calls = nullptr) {
    const TranslationCache::Key key{atomic.id, taxonomy.fingerprint(), "llm", backend.id()};
    if (cache) {
        if (const auto cached = cache->get(key)) return {atomic.id, *cached};
    }
    std::vector<ChatMessage> messages;
    messages.push_back({"system", std::string(kTranslatorSystemPrompt)});
    for (const FewShotPair& pair : few_shot) {
        messages.push_back({"user", pair.input});
        messages.push_back({"assistant", pair.output});
    }
    messages.push_back({"user", translation_user_message(atomic, taxonomy)});
    const std::string raw = backend.complete(messages);
    if (backend_calls) ++*backend_calls;
    const std::string text = trim(raw);
    if (text.empty()) {
        throw Error("translation backend returned an empty statement for \"" + atomic.id + "\"");
    }
    if (cache) cache->put(key, text);
    return {atomic.id, text};
}

}  // namespace polc
