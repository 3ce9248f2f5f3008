#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lclfqa/provider.hpp"

using namespace lclfqa;
using nlohmann::json;

namespace {

double dot(const Embedding& a, const Embedding& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

class FlakyChat final : public ChatModel {
public:
    explicit FlakyChat(int failures) : failures_(failures) {}
    std::string complete(const std::string&) override {
        if (calls_++ < failures_) throw TransientProviderError("HTTP 503");
        return "ok";
    }
    int calls() const { return calls_; }

private:
    int failures_;
    std::atomic<int> calls_{0};
};

RetryPolicy fast(int retries) {
    RetryPolicy p;
    p.max_retries = retries;
    p.initial_backoff = std::chrono::milliseconds(1);
    p.max_backoff = std::chrono::milliseconds(2);
    return p;
}

}  // namespace

TEST(MockChat, FirstMatchingRuleAnswers) {
    MockChat chat({{{"## Question"}, {"translation"}, "canned"}, {{"## Question"}, {}, "second"}});
    EXPECT_EQ(chat.complete("## Question\nwhat?"), "canned");
    EXPECT_EQ(chat.complete("## Question translation"), "second");
    EXPECT_EQ(chat.call_count(), 2u);
    EXPECT_EQ(chat.prompts().front(), "## Question\nwhat?");
}

TEST(MockChat, UnscriptedPromptIsAnError) {
    MockChat chat({{{"alpha"}, {}, "a"}});
    try {
        chat.complete("beta");
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_NE(std::string(e.what()).find("unscripted prompt"), std::string::npos);
    }
    EXPECT_THROW(chat.complete(""), PreconditionError);
}

TEST(MockChat, RespondersSeeThePrompt) {
    MockChat chat;
    chat.add_responder([](std::string_view p) -> std::optional<std::string> {
        if (p.starts_with("echo ")) return std::string(p.substr(5));
        return std::nullopt;
    });
    EXPECT_EQ(chat.complete("echo hi"), "hi");
}

TEST(HashEmbedder, DeterministicUnitVectors) {
    HashEmbedder e(16);
    const auto v = e.embed({"a", "a", "b"});
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0], v[1]);
    EXPECT_NE(v[0], v[2]);
    EXPECT_NEAR(dot(v[0], v[0]), 1.0, 1e-6);
    EXPECT_LT(dot(v[0], v[2]), 1.0 - 1e-6);
    EXPECT_EQ(e.embed_one("a"), v[0]);
    EXPECT_EQ(HashEmbedder(16).embed({"a"})[0], v[0]);
    EXPECT_THROW(e.embed({}), PreconditionError);
    EXPECT_EQ(e.model_name(), "mock-hash");
}

TEST(Normalize, ZeroVectorRejected) {
    Embedding v{3, 4};
    normalize(v);
    EXPECT_FLOAT_EQ(v[0], 0.6f);
    Embedding z{0, 0};
    EXPECT_THROW(normalize(z), ProviderError);
}

TEST(Retries, TransientThenSuccess) {
    auto flaky = std::make_shared<FlakyChat>(1);
    RetryingChatModel chat(flaky, fast(2));
    EXPECT_EQ(chat.complete("x"), "ok");
    EXPECT_EQ(flaky->calls(), 2);
}

TEST(Retries, ExhaustedBecomesProviderError) {
    auto flaky = std::make_shared<FlakyChat>(10);
    RetryingChatModel chat(flaky, fast(2));
    try {
        chat.complete("x");
        FAIL();
    } catch (const TransientProviderError&) {
        FAIL() << "transient error escaped";
    } catch (const ProviderError& e) {
        EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
    }
    EXPECT_EQ(flaky->calls(), 3);
}

TEST(Retries, PermanentErrorNotRetried) {
    int calls = 0;
    EXPECT_THROW(with_retries(fast(3), [&]() -> int {
                     ++calls;
                     throw ProviderError("HTTP 400");
                 }),
                 ProviderError);
    EXPECT_EQ(calls, 1);
}

TEST(MakeProviders, MockFromJson) {
    const auto p = make_providers(json::parse(R"({"kind":"mock","embedding_dimension":8,
        "chat":[{"all_of":["x"],"none_of":["y"],"response":"R"}]})"));
    EXPECT_EQ(p.chat->complete("x"), "R");
    EXPECT_THROW(p.chat->complete("x y"), ProviderError);
    EXPECT_EQ(p.embedder->dimension(), 8u);
}

TEST(MakeProviders, BadSettings) {
    EXPECT_THROW(make_providers(json::parse(R"({"kind":"carrier-pigeon"})")), ConfigError);
    EXPECT_THROW(make_providers(json::parse(R"({"kind":"mock","chat":[{"all_of":["x"]}]})")), ConfigError);
    EXPECT_THROW(make_providers(json::parse(R"({"kind":"http","api_key_env":"LCLFQA_TEST_UNSET_KEY"})")),
                 ConfigError);
    EXPECT_THROW(make_providers(json::parse(R"({"kind":"http","api_key_env":"","base_url":"no-scheme"})")),
                 ConfigError);
}

// Contract test against a local server speaking the chat-completions/embeddings JSON shape.
class HttpContract : public ::testing::Test {
protected:
    void SetUp() override {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            auth_ = req.get_header_value("Authorization");
            const auto body = json::parse(req.body);
            if (chat_failures_-- > 0) {
                res.status = 503;
                res.set_content("busy", "text/plain");
                return;
            }
            const auto prompt = body["messages"][0]["content"].get<std::string>();
            res.set_content(json{{"choices", json::array({{{"message", {{"role", "assistant"},
                                                                         {"content", "echo:" + prompt}}}}})}}.dump(),
                            "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = json::parse(req.body);
            ++embed_calls_;
            json data = json::array();
            const auto n = body["input"].size();
            for (std::size_t i = n; i-- > 0;) {
                std::vector<float> v(dim_, 0.0f);
                v[i % dim_] = 2.0f;
                data.push_back({{"index", i}, {"embedding", v}});
            }
            if (drift_) data[0]["embedding"].push_back(1.0f);
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        ::setenv("LCLFQA_TEST_KEY", "sk-test", 1);
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    ProviderConfig config() const {
        ProviderConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        c.api_key_env = "LCLFQA_TEST_KEY";
        c.embedding_dimension = dim_;
        c.embed_batch_size = 2;
        c.timeout_seconds = 5;
        return c;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::size_t dim_ = 4;
    std::atomic<int> chat_failures_{0};
    std::atomic<int> embed_calls_{0};
    bool drift_ = false;
    std::string auth_;
};

TEST_F(HttpContract, ChatRoundTripWithBearerKey) {
    HttpChatModel chat(config(), std::make_shared<ConcurrencyLimit>(2));
    EXPECT_EQ(chat.complete("hello"), "echo:hello");
    EXPECT_EQ(auth_, "Bearer sk-test");
}

TEST_F(HttpContract, ServerErrorIsTransientAndRetried) {
    chat_failures_ = 1;
    auto limit = std::make_shared<ConcurrencyLimit>(1);
    EXPECT_THROW(HttpChatModel(config(), limit).complete("x"), TransientProviderError);
    chat_failures_ = 1;
    RetryingChatModel chat(std::make_shared<HttpChatModel>(config(), limit), fast(2));
    EXPECT_EQ(chat.complete("x"), "echo:x");
}

TEST_F(HttpContract, EmbeddingsBatchedAndReordered) {
    HttpEmbedder embedder(config(), std::make_shared<ConcurrencyLimit>(2));
    const auto v = embedder.embed({"a", "b", "c"});
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(embed_calls_, 2);
    EXPECT_FLOAT_EQ(v[0][0], 1.0f);
    EXPECT_FLOAT_EQ(v[1][1], 1.0f);
    EXPECT_FLOAT_EQ(v[2][0], 1.0f);
}

TEST_F(HttpContract, DimensionDriftRejected) {
    drift_ = true;
    HttpEmbedder embedder(config(), std::make_shared<ConcurrencyLimit>(2));
    EXPECT_THROW(embedder.embed({"a", "b"}), ProviderError);
}

TEST_F(HttpContract, UnreachableServerIsTransient) {
    auto c = config();
    server_.stop();
    c.timeout_seconds = 1;
    HttpChatModel chat(c, std::make_shared<ConcurrencyLimit>(1));
    EXPECT_THROW(chat.complete("x"), TransientProviderError);
}
