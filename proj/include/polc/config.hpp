#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "polc/backends_http.hpp"
#include "polc/entailment.hpp"
#include "polc/errors.hpp"
#include "polc/fs.hpp"
#include "polc/json.hpp"
#include "polc/retrieval.hpp"

namespace polc {

/// Instantiated backends plus the compile-time knobs the config carries.
struct BackendSetup {
    std::unique_ptr<EmbedderBackend> embedder;
    std::unique_ptr<ChatBackend> chat;
    int max_in_flight = 4;
};

namespace detail {

inline HttpBackendConfig http_config_from_json(const Json& doc, const std::string& path) {
    HttpBackendConfig config;
    if (!doc.contains("base_url") || !doc["base_url"].is_string()) {
        throw SchemaError(path + ".base_url", "missing or not a string");
    }
    config.base_url = doc["base_url"].get<std::string>();
    if (!doc.contains("model") || !doc["model"].is_string()) {
        throw SchemaError(path + ".model", "missing or not a string");
    }
    config.model = doc["model"].get<std::string>();
    if (doc.contains("temperature")) config.temperature = doc["temperature"].get<double>();
    if (doc.contains("timeout_ms")) config.timeout_ms = doc["timeout_ms"].get<int>();
    if (doc.contains("max_retries")) config.max_retries = doc["max_retries"].get<int>();
    if (doc.contains("api_key_env")) config.api_key_env = doc["api_key_env"].get<std::string>();
    if (doc.contains("dimension")) config.dimension = doc["dimension"].get<int>();
    return config;
}

inline std::filesystem::path resolve_sibling(const std::filesystem::path& config_path,
                                             const std::string& referenced) {
    const std::filesystem::path path(referenced);
    if (path.is_absolute()) return path;
    return config_path.parent_path() / path;
}

}  // namespace detail

/// Loads a scripted chat backend's answer map: rows of
/// {policy_id?, statement, value, evidence?}.
inline std::unique_ptr<ScriptedChatBackend> load_scripted_backend(
    const std::filesystem::path& answers_path, const std::string& policy_marker_regex) {
    Json doc;
    try {
        doc = Json::parse(read_file(answers_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(answers_path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("answers") || !doc["answers"].is_array()) {
        throw SchemaError(answers_path.string(), "expected an object with an \"answers\" array");
    }
    auto backend = policy_marker_regex.empty()
                       ? std::make_unique<ScriptedChatBackend>()
                       : std::make_unique<ScriptedChatBackend>(policy_marker_regex);
    for (std::size_t i = 0; i < doc["answers"].size(); ++i) {
        const Json& row = doc["answers"][i];
        const std::string path = "answers[" + std::to_string(i) + "]";
        if (!row.is_object() || !row.contains("statement") || !row["statement"].is_string() ||
            !row.contains("value") || !row["value"].is_boolean()) {
            throw SchemaError(path, "expected {statement, value[, policy_id, evidence]}");
        }
        ScriptedChatBackend::Answer answer;
        answer.value = row["value"].get<bool>();
        if (row.contains("evidence")) {
            answer.evidence = row["evidence"].get<std::vector<int>>();
        }
        const std::string policy_id =
            row.contains("policy_id") ? row["policy_id"].get<std::string>() : "";
        backend->add_answer(policy_id, row["statement"].get<std::string>(), std::move(answer));
    }
    return backend;
}

/// Builds the embedder and chat backends described by a config file.
///
/// {
///   "embedder": {"type": "mock", "dimension": 64}
///             | {"type": "http", "base_url", "model", "dimension", ...},
///   "chat":     {"type": "scripted", "answers_file"[, "policy_marker_regex"]}
///             | {"type": "http", "base_url", "model", "temperature",
///                "timeout_ms", "max_retries", "api_key_env", "max_in_flight"}
/// }
inline BackendSetup load_backend_setup(const std::filesystem::path& config_path) {
    Json doc;
    try {
        doc = Json::parse(read_file(config_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(config_path.string(), std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError(config_path.string(), "config must be a JSON object");
    BackendSetup setup;

    if (!doc.contains("embedder") || !doc["embedder"].is_object()) {
        throw SchemaError("embedder", "missing or not an object");
    }
    const Json& embedder = doc["embedder"];
    const std::string embedder_type =
        embedder.contains("type") ? embedder["type"].get<std::string>() : "";
    if (embedder_type == "mock") {
        const int dimension = embedder.contains("dimension") ? embedder["dimension"].get<int>() : 64;
        setup.embedder = std::make_unique<BagOfWordsEmbedder>(dimension);
    } else if (embedder_type == "http") {
        setup.embedder =
            std::make_unique<HttpEmbedder>(detail::http_config_from_json(embedder, "embedder"));
    } else {
        throw SchemaError("embedder.type", "expected \"mock\" or \"http\"");
    }

    if (!doc.contains("chat") || !doc["chat"].is_object()) {
        throw SchemaError("chat", "missing or not an object");
    }
    const Json& chat = doc["chat"];
    const std::string chat_type = chat.contains("type") ? chat["type"].get<std::string>() : "";
    if (chat_type == "scripted") {
        if (!chat.contains("answers_file") || !chat["answers_file"].is_string()) {
            throw SchemaError("chat.answers_file", "missing or not a string");
        }
        const std::string marker = chat.contains("policy_marker_regex")
                                       ? chat["policy_marker_regex"].get<std::string>()
                                       : "";
        setup.chat = load_scripted_backend(
            detail::resolve_sibling(config_path, chat["answers_file"].get<std::string>()), marker);
    } else if (chat_type == "http") {
        setup.chat = std::make_unique<HttpChatBackend>(detail::http_config_from_json(chat, "chat"));
        if (chat.contains("max_in_flight")) setup.max_in_flight = chat["max_in_flight"].get<int>();
    } else {
        throw SchemaError("chat.type", "expected \"scripted\" or \"http\"");
    }
    if (setup.max_in_flight < 1) throw SchemaError("chat.max_in_flight", "must be at least 1");
    return setup;
}

}  // namespace polc
