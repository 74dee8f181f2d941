#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>

#include "polc/entailment.hpp"
#include "polc/errors.hpp"
#include "polc/json.hpp"
#include "polc/retrieval.hpp"

namespace polc {

/// Connection settings for a JSON-over-HTTP backend. The API key is read from
/// the environment variable named here — secrets never live in config files.
struct HttpBackendConfig {
    std::string base_url;       // scheme://host[:port][/path-prefix]
    std::string model;
    double temperature = 0.0;   // 0 keeps runs deterministic
    int timeout_ms = 30000;
    int max_retries = 2;
    std::string api_key_env;    // optional
    int dimension = 0;          // embedders only
};

namespace detail {

struct SplitUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // "" or "/prefix"
};

inline SplitUrl split_base_url(const std::string& base_url) {
    const std::size_t scheme = base_url.find("://");
    if (scheme == std::string::npos) {
        throw Error("base_url must start with http:// or https://: " + base_url);
    }
    const std::size_t path = base_url.find('/', scheme + 3);
    SplitUrl split;
    if (path == std::string::npos) {
        split.origin = base_url;
    } else {
        split.origin = base_url.substr(0, path);
        split.path_prefix = base_url.substr(path);
        while (!split.path_prefix.empty() && split.path_prefix.back() == '/') {
            split.path_prefix.pop_back();
        }
    }
    return split;
}

/// POSTs JSON with bounded retries. Connection failures and 5xx responses are
/// retried; other non-2xx statuses fail immediately.
inline Json post_json(const HttpBackendConfig& config, const std::string& path, const Json& body) {
    const SplitUrl url = split_base_url(config.base_url);
    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    const std::string payload = body.dump();
    std::string last_failure;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        }
        // httplib clients are not thread-safe; one per request keeps the
        // compile fan-out simple.
        httplib::Client client(url.origin);
        client.set_connection_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
        client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
        auto response = client.Post(url.path_prefix + path, headers, payload, "application/json");
        if (!response) {
            last_failure = "connection to " + url.origin + " failed: " +
                           httplib::to_string(response.error());
            continue;
        }
        if (response->status >= 200 && response->status < 300) {
            try {
                return Json::parse(response->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw TransportError("backend returned invalid JSON: " + std::string(e.what()));
            }
        }
        last_failure = "backend returned HTTP " + std::to_string(response->status) + ": " +
                       response->body.substr(0, 200);
        if (response->status < 500) break;  // client errors do not heal on retry
    }
    throw TransportError(last_failure);
}

}  // namespace detail

/// Chat-completion backend speaking the {model, messages, temperature} wire
/// format against <base_url>/chat/completions.
class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.model.empty()) throw Error("chat backend config needs a model id");
    }

    std::string id() const override { return config_.model; }

    std::string complete(const std::vector<ChatMessage>& messages) override {
        Json body;
        body["model"] = config_.model;
        Json message_list = Json::array();
        for (const ChatMessage& message : messages) {
            Json entry;
            entry["role"] = message.role;
            entry["content"] = message.content;
            message_list.push_back(std::move(entry));
        }
        body["messages"] = std::move(message_list);
        body["temperature"] = config_.temperature;
        const Json response = detail::post_json(config_, "/chat/completions", body);
        try {
            return response.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw TransportError("chat response lacks choices[0].message.content");
        }
    }

private:
    HttpBackendConfig config_;
};

/// Embedding backend speaking {model, input} against <base_url>/embeddings.
/// Responses are re-normalized so downstream cosine math holds regardless of
/// what the server returns.
class HttpEmbedder final : public EmbedderBackend {
public:
    explicit HttpEmbedder(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.model.empty()) throw Error("embedder config needs a model id");
        if (config_.dimension < 1) throw Error("embedder config needs a positive dimension");
    }

    std::string id() const override { return config_.model; }
    int dimension() const override { return config_.dimension; }

    std::vector<double> embed(std::string_view text) override {
        Json body;
        body["model"] = config_.model;
        body["input"] = Json::array({std::string(text)});
        const Json response = detail::post_json(config_, "/embeddings", body);
        std::vector<double> vec;
        try {
            if (response.contains("data")) {
                vec = response.at("data").at(0).at("embedding").get<std::vector<double>>();
            } else {
                vec = response.at("embeddings").at(0).get<std::vector<double>>();
            }
        } catch (const nlohmann::json::exception&) {
            throw TransportError("embedding response lacks a vector");
        }
        if (static_cast<int>(vec.size()) != config_.dimension) {
            throw TransportError("embedding dimension mismatch: expected " +
                                 std::to_string(config_.dimension) + ", got " +
                                 std::to_string(vec.size()));
        }
        detail::l2_normalize(vec);
        return vec;
    }

private:
    HttpBackendConfig config_;
};

}  // namespace polc
