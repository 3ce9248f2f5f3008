#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lclfqa/error.hpp"

namespace lclfqa {

using Embedding = std::vector<float>;

/// Chat-completion backend. Implementations must be safe for concurrent calls.
class ChatModel {
public:
    virtual ~ChatModel() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Text-embedding backend. Implementations must be safe for concurrent calls and
/// return one vector per input, in input order, all of dimension().
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
    [[nodiscard]] virtual std::size_t dimension() const = 0;
    [[nodiscard]] virtual std::string model_name() const = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};
};

/// Calls fn until it returns without TransientProviderError, sleeping with
/// exponential backoff between attempts. Gives up after max_retries retries with a
/// ProviderError carrying the last failure.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn());

/// Caps concurrent backend calls. Shared by every provider built from one config.
class ConcurrencyLimit {
public:
    explicit ConcurrencyLimit(std::size_t max_in_flight);

    class Permit {
    public:
        explicit Permit(ConcurrencyLimit& limit) : limit_(&limit) { limit_->slots_.acquire(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
        ~Permit() { limit_->slots_.release(); }

    private:
        ConcurrencyLimit* limit_;
    };

    [[nodiscard]] Permit acquire() { return Permit(*this); }

private:
    std::counting_semaphore<1024> slots_;
};

/// Settings for the HTTP backends (chat-completions / embeddings JSON style).
struct ProviderConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o";
    std::string embedding_model = "text-embedding-3-large";
    std::size_t embedding_dimension = 3072;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_seconds = 60.0;
    int max_retries = 3;
    std::size_t max_in_flight = 4;
    std::size_t embed_batch_size = 64;
    double temperature = 0.0;
    std::optional<std::int64_t> seed = 0;
};

void validate(const ProviderConfig& config);

/// POST {base_url}/chat/completions with a single user message.
class HttpChatModel final : public ChatModel {
public:
    HttpChatModel(ProviderConfig config, std::shared_ptr<ConcurrencyLimit> limit);
    std::string complete(const std::string& prompt) override;

private:
    ProviderConfig config_;
    std::string api_key_;
    std::shared_ptr<ConcurrencyLimit> limit_;
};

/// POST {base_url}/embeddings, batching inputs by embed_batch_size.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(ProviderConfig config, std::shared_ptr<ConcurrencyLimit> limit);
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    [[nodiscard]] std::size_t dimension() const override { return config_.embedding_dimension; }
    [[nodiscard]] std::string model_name() const override { return config_.embedding_model; }

private:
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, std::size_t begin,
                                       std::size_t end);

    ProviderConfig config_;
    std::string api_key_;
    std::shared_ptr<ConcurrencyLimit> limit_;
};

/// Retries transient failures of a wrapped chat backend.
class RetryingChatModel final : public ChatModel {
public:
    RetryingChatModel(std::shared_ptr<ChatModel> inner, RetryPolicy policy)
        : inner_(std::move(inner)), policy_(policy) {}
    std::string complete(const std::string& prompt) override;

private:
    std::shared_ptr<ChatModel> inner_;
    RetryPolicy policy_;
};

/// Retries transient failures of a wrapped embedder.
class RetryingEmbedder final : public Embedder {
public:
    RetryingEmbedder(std::shared_ptr<Embedder> inner, RetryPolicy policy)
        : inner_(std::move(inner)), policy_(policy) {}
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    [[nodiscard]] std::size_t dimension() const override { return inner_->dimension(); }
    [[nodiscard]] std::string model_name() const override { return inner_->model_name(); }

private:
    std::shared_ptr<Embedder> inner_;
    RetryPolicy policy_;
};

/// One scripted chat rule: fires when the prompt contains every `all_of` string
/// and none of the `none_of` strings.
struct MockRule {
    std::vector<std::string> all_of;
    std::vector<std::string> none_of;
    std::string response;
};

/// Deterministic in-process chat backend. Rules and responders are tried in the
/// order they were added; the first match answers. A prompt nothing matches is an
/// error ("unscripted prompt").
class MockChat final : public ChatModel {
public:
    using Responder = std::function<std::optional<std::string>(std::string_view prompt)>;

    MockChat() = default;
    explicit MockChat(std::vector<MockRule> rules);

    MockChat& add_rule(MockRule rule);
    MockChat& add_responder(Responder responder);

    std::string complete(const std::string& prompt) override;

    [[nodiscard]] std::size_t call_count() const;
    [[nodiscard]] std::vector<std::string> prompts() const;

private:
    std::vector<Responder> responders_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

/// Deterministic embedder: FNV-1a of the text seeds an mt19937_64 stream whose
/// draws, mapped to [-1, 1), form a vector that is then unit-normalised.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension);
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    [[nodiscard]] std::size_t dimension() const override { return dimension_; }
    [[nodiscard]] std::string model_name() const override { return "mock-hash"; }

    [[nodiscard]] Embedding embed_one(std::string_view text) const;

private:
    std::size_t dimension_;
};

/// Scales `v` to unit Euclidean norm. Throws ProviderError on a zero vector.
void normalize(Embedding& v);

struct Providers {
    std::shared_ptr<ChatModel> chat;
    std::shared_ptr<Embedder> embedder;
};

/// Builds providers from a JSON object of the form
///   {"kind": "http", ...ProviderConfig fields...}   or
///   {"kind": "mock", "embedding_dimension": 8, "chat": [{"all_of": [...], "none_of": [...], "response": "..."}]}
Providers make_providers(const nlohmann::json& settings);

ProviderConfig provider_config_from_json(const nlohmann::json& settings);
std::vector<MockRule> mock_rules_from_json(const nlohmann::json& rules);

// ---------------------------------------------------------------------------

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransientProviderError& e) {
            if (attempt >= policy.max_retries) {
                throw ProviderError("gave up after " + std::to_string(attempt + 1) + " attempts: " + e.what());
            }
        }
        std::this_thread::sleep_for(backoff);
        backoff = std::min(policy.max_backoff,
                           std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * policy.multiplier)));
    }
}

}  // namespace lclfqa
