#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polc/digest.hpp"
#include "polc/errors.hpp"
#include "polc/text.hpp"

namespace polc {

/// Chat roles and content for the JSON wire format {model, messages, temperature}.
struct ChatMessage {
    std::string role;
    std::string content;
};

/// A chat-completion backend. Implementations must be deterministic for a
/// fixed message list (temperature 0) and callable from multiple threads.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string id() const = 0;  // model id; part of cache keys
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// One entailment question: does the policy (the context segments) entail the
/// hypothesis statement?
struct EntailmentQuery {
    std::string hypothesis;
    std::vector<std::pair<int, std::string>> context;  // (segment index, segment text)
};

inline constexpr std::string_view kEntailmentSystemPrompt =
    "You answer questions about privacy policies.";

/// Participates in the verdict cache key; bump when the prompt layout changes.
inline constexpr std::string_view kEntailmentPromptVersion = "entail-v1";

inline constexpr std::string_view kEvidenceInstruction =
    "Give evidence by providing all the source ids that are used to answer the question in the "
    "format of - Evidence:[2,3,7,...]";

inline constexpr std::string_view kAnswerInstruction =
    "Begin your answer with \"Yes\" or \"No\".";

/// Builds the single user prompt: every context segment is suffixed with its
/// ` [source_id:i]` tag and concatenated in ascending index order to form the
/// policy text P, then the question and the two answering instructions follow.
inline std::string build_prompt(const EntailmentQuery& query) {
    if (query.context.empty()) throw Error("entailment query has no context segments");
    std::vector<std::pair<int, std::string_view>> context;
    context.reserve(query.context.size());
    for (const auto& [index, text] : query.context) context.emplace_back(index, text);
    std::sort(context.begin(), context.end());
    std::string policy;
    for (std::size_t i = 0; i < context.size(); ++i) {
        if (i > 0 && context[i].first == context[i - 1].first) {
            throw Error("duplicate segment index " + std::to_string(context[i].first) +
                        " in entailment context");
        }
        if (i > 0) policy += ' ';
        policy += context[i].second;
        policy += " [source_id:" + std::to_string(context[i].first) + "]";
    }
    std::string prompt = "According to the Privacy Policy " + policy +
                         ", is the following statement True? " + query.hypothesis;
    prompt += '\n';
    prompt += kEvidenceInstruction;
    prompt += '\n';
    prompt += kAnswerInstruction;
    return prompt;
}

/// A parsed backend answer: the boolean verdict plus the cited segment
/// indices (deduplicated, ascending, restricted to the context).
struct Verdict {
    bool value = false;
    std::vector<int> evidence;
    std::string raw;
    int dropped_evidence = 0;  // cited ids that were not in the context
};

namespace detail {

/// Extracts the integers of the last complete `Evidence:[...]` group (case
/// insensitive, optional whitespace). Returns nothing when no group exists.
inline std::optional<std::vector<int>> last_evidence_group(std::string_view text) {
    std::optional<std::vector<int>> result;
    for (std::size_t pos = 0; pos + 8 <= text.size(); ++pos) {
        if (!ci_starts_with(text, pos, "evidence")) continue;
        std::size_t i = pos + 8;
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        if (i >= text.size() || text[i] != ':') continue;
        ++i;
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        if (i >= text.size() || text[i] != '[') continue;
        const std::size_t close = text.find(']', i + 1);
        if (close == std::string_view::npos) continue;
        std::vector<int> ids;
        std::size_t j = i + 1;
        while (j < close) {
            if (text[j] >= '0' && text[j] <= '9') {
                std::size_t start = j;
                while (j < close && text[j] >= '0' && text[j] <= '9') ++j;
                // Longer runs than any plausible segment count are junk, not ids.
                if (j - start <= 9) ids.push_back(std::stoi(std::string(text.substr(start, j - start))));
            } else {
                ++j;
            }
        }
        result = std::move(ids);
        pos = close;  // keep scanning; a later group wins
    }
    return result;
}

}  // namespace detail

/// Parses a raw completion into a Verdict. The answer must begin (after
/// leading whitespace/quotes) with "Yes" or "No" at a word boundary —
/// anything else is a VerdictError, never a silent default. Cited ids outside
/// the context are dropped and counted.
inline Verdict parse_verdict(std::string_view raw, const std::set<int>& context_indices) {
    std::size_t start = 0;
    while (start < raw.size() &&
           (is_ascii_space(raw[start]) || raw[start] == '"' || raw[start] == '\'')) {
        ++start;
    }
    const std::string_view body = raw.substr(start);
    auto begins_with_word = [&](std::string_view word) {
        if (!detail::ci_starts_with(body, 0, word)) return false;
        return body.size() == word.size() || !is_ascii_alnum(body[word.size()]);
    };
    Verdict verdict;
    verdict.raw = std::string(raw);
    if (begins_with_word("yes")) {
        verdict.value = true;
    } else if (begins_with_word("no")) {
        verdict.value = false;
    } else {
        throw VerdictError(std::string(raw));
    }
    if (const auto cited = detail::last_evidence_group(raw)) {
        std::set<int> kept;
        for (int id : *cited) {
            if (context_indices.count(id)) {
                kept.insert(id);
            } else {
                ++verdict.dropped_evidence;
            }
        }
        verdict.evidence.assign(kept.begin(), kept.end());
    }
    return verdict;
}

/// Asks the backend whether the context entails the hypothesis.
inline Verdict entail(ChatBackend& backend, const EntailmentQuery& query) {
    const std::string prompt = build_prompt(query);
    const std::vector<ChatMessage> messages = {
        {"system", std::string(kEntailmentSystemPrompt)},
        {"user", prompt},
    };
    const std::string raw = backend.complete(messages);
    std::set<int> context_indices;
    for (const auto& [index, text] : query.context) context_indices.insert(index);
    return parse_verdict(raw, context_indices);
}

/// In-process backend for tests and reproducible runs: answers are looked up
/// by (policy key, hypothesis digest). The hypothesis is recovered from the
/// prompt layout; the policy key is the first match of `policy_marker_regex`
/// in the prompt (fixtures embed a marker token in their text). With no
/// marker regex, answers are keyed by hypothesis alone.
class ScriptedChatBackend final : public ChatBackend {
public:
    struct Answer {
        bool value = false;
        std::vector<int> evidence;
    };

    ScriptedChatBackend() = default;
    explicit ScriptedChatBackend(std::string policy_marker_regex)
        : marker_(std::regex(policy_marker_regex)) {}

    void add_answer(const std::string& policy_key, const std::string& hypothesis, Answer answer) {
        answers_[{policy_key, content_digest(hypothesis)}] = std::move(answer);
    }

    std::string id() const override { return "scripted"; }

    std::string complete(const std::vector<ChatMessage>& messages) override {
        calls_.fetch_add(1);
        if (messages.empty()) throw Error("scripted backend called with no messages");
        const std::string& prompt = messages.back().content;
        const std::string hypothesis = extract_hypothesis(prompt);
        std::string policy_key;
        if (marker_) {
            std::smatch match;
            if (std::regex_search(prompt, match, *marker_)) policy_key = match.str();
        }
        const auto it = answers_.find({policy_key, content_digest(hypothesis)});
        if (it == answers_.end()) {
            throw Error("scripted backend has no answer for policy key \"" + policy_key +
                        "\" and statement \"" + hypothesis + "\"");
        }
        std::string response = it->second.value ? "Yes." : "No.";
        if (!it->second.evidence.empty()) {
            response += " Evidence:[";
            for (std::size_t i = 0; i < it->second.evidence.size(); ++i) {
                if (i > 0) response += ',';
                response += std::to_string(it->second.evidence[i]);
            }
            response += ']';
        }
        return response;
    }

    int calls() const { return calls_.load(); }

    /// Recovers the hypothesis from a prompt produced by build_prompt.
    static std::string extract_hypothesis(const std::string& prompt) {
        static constexpr std::string_view kQuestion = ", is the following statement True? ";
        const std::size_t question = prompt.rfind(kQuestion);
        const std::size_t newline = prompt.find('\n');
        if (question == std::string::npos || newline == std::string::npos || newline < question) {
            throw Error("scripted backend: prompt does not match the entailment layout");
        }
        const std::size_t begin = question + kQuestion.size();
        return prompt.substr(begin, newline - begin);
    }

private:
    std::map<std::pair<std::string, std::string>, Answer> answers_;
    std::optional<std::regex> marker_;
    std::atomic<int> calls_{0};
};

}  // namespace polc
