#include "lclfqa/provider.hpp"

#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lclfqa/random.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

using json = nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path_prefix;
};

Endpoint parse_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url must include a scheme: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_begin);
    ep.path_prefix = path_begin == std::string::npos ? "" : url.substr(path_begin);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
    return ep;
}

std::string read_api_key(const ProviderConfig& config) {
    if (config.api_key_env.empty()) return {};
    const char* value = std::getenv(config.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw ConfigError("environment variable " + config.api_key_env + " is not set");
    }
    return value;
}

bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

json post_json(const ProviderConfig& config, const std::string& api_key, const std::string& route,
               const json& body) {
    const auto ep = parse_base_url(config.base_url);
    httplib::Client client(ep.origin);
    const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
    const auto secs = static_cast<time_t>(timeout.count());
    const auto usecs = static_cast<time_t>((timeout.count() - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = client.Post(ep.path_prefix + route, headers, body.dump(), "application/json");
    if (!res) {
        throw TransientProviderError("POST " + route + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        const auto detail = "POST " + route + " returned HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 300);
        if (is_transient_status(res->status)) throw TransientProviderError(detail);
        throw ProviderError(detail);
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error&) {
        throw ProviderError("POST " + route + " returned a non-JSON body");
    }
}

RetryPolicy retry_policy(const ProviderConfig& config) {
    RetryPolicy p;
    p.max_retries = config.max_retries;
    return p;
}

}  // namespace

void validate(const ProviderConfig& config) {
    if (!(config.timeout_seconds > 0)) throw ConfigError("provider timeout must be > 0");
    if (config.max_retries < 0) throw ConfigError("provider max_retries must be >= 0");
    if (config.max_in_flight < 1) throw ConfigError("provider max_in_flight must be >= 1");
    if (config.embed_batch_size < 1) throw ConfigError("provider embed_batch_size must be >= 1");
    if (config.embedding_dimension < 1) throw ConfigError("embedding_dimension must be >= 1");
    parse_base_url(config.base_url);
}

ConcurrencyLimit::ConcurrencyLimit(std::size_t max_in_flight)
    : slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(max_in_flight, 1, 1024))) {}

HttpChatModel::HttpChatModel(ProviderConfig config, std::shared_ptr<ConcurrencyLimit> limit)
    : config_(std::move(config)), limit_(std::move(limit)) {
    validate(config_);
    api_key_ = read_api_key(config_);
}

std::string HttpChatModel::complete(const std::string& prompt) {
    if (prompt.empty()) throw PreconditionError("chat prompt must be non-empty");
    json body{{"model", config_.chat_model},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
              {"temperature", config_.temperature}};
    if (config_.seed) body["seed"] = *config_.seed;

    json reply;
    {
        auto permit = limit_->acquire();
        reply = post_json(config_, api_key_, "/chat/completions", body);
    }
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ProviderError("chat response lacks choices[0].message.content");
    }
}

HttpEmbedder::HttpEmbedder(ProviderConfig config, std::shared_ptr<ConcurrencyLimit> limit)
    : config_(std::move(config)), limit_(std::move(limit)) {
    validate(config_);
    api_key_ = read_api_key(config_);
}

std::vector<Embedding> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw PreconditionError("embed requires at least one text");
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t b = 0; b < texts.size(); b += config_.embed_batch_size) {
        const auto e = std::min(texts.size(), b + config_.embed_batch_size);
        auto batch = embed_batch(texts, b, e);
        std::move(batch.begin(), batch.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<Embedding> HttpEmbedder::embed_batch(const std::vector<std::string>& texts, std::size_t begin,
                                                 std::size_t end) {
    json input = json::array();
    for (std::size_t i = begin; i < end; ++i) input.push_back(texts[i]);
    json body{{"model", config_.embedding_model}, {"input", std::move(input)}};

    json reply;
    {
        auto permit = limit_->acquire();
        reply = post_json(config_, api_key_, "/embeddings", body);
    }

    std::vector<Embedding> out(end - begin);
    try {
        const auto& data = reply.at("data");
        if (data.size() != out.size()) {
            throw ProviderError("embeddings response has " + std::to_string(data.size()) + " items for " +
                                std::to_string(out.size()) + " inputs");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto idx = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
            if (idx >= out.size()) throw ProviderError("embeddings response index out of range");
            out[idx] = data[i].at("embedding").get<Embedding>();
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embeddings response: ") + e.what());
    }
    for (auto& v : out) {
        if (v.size() != config_.embedding_dimension) {
            throw ProviderError("embedding dimension drift: expected " + std::to_string(config_.embedding_dimension) +
                                ", got " + std::to_string(v.size()));
        }
        normalize(v);
    }
    return out;
}

std::string RetryingChatModel::complete(const std::string& prompt) {
    return with_retries(policy_, [&] { return inner_->complete(prompt); });
}

std::vector<Embedding> RetryingEmbedder::embed(const std::vector<std::string>& texts) {
    return with_retries(policy_, [&] { return inner_->embed(texts); });
}

MockChat::MockChat(std::vector<MockRule> rules) {
    for (auto& r : rules) add_rule(std::move(r));
}

MockChat& MockChat::add_rule(MockRule rule) {
    return add_responder([rule = std::move(rule)](std::string_view prompt) -> std::optional<std::string> {
        for (const auto& s : rule.all_of) {
            if (prompt.find(s) == std::string_view::npos) return std::nullopt;
        }
        for (const auto& s : rule.none_of) {
            if (prompt.find(s) != std::string_view::npos) return std::nullopt;
        }
        return rule.response;
    });
}

MockChat& MockChat::add_responder(Responder responder) {
    std::lock_guard lock(mutex_);
    responders_.push_back(std::move(responder));
    return *this;
}

std::string MockChat::complete(const std::string& prompt) {
    if (prompt.empty()) throw PreconditionError("chat prompt must be non-empty");
    std::vector<Responder> responders;
    {
        std::lock_guard lock(mutex_);
        prompts_.push_back(prompt);
        responders = responders_;
    }
    for (const auto& r : responders) {
        if (auto reply = r(prompt)) return *reply;
    }
    throw ProviderError("unscripted prompt: " + prompt.substr(0, 80));
}

std::size_t MockChat::call_count() const {
    std::lock_guard lock(mutex_);
    return prompts_.size();
}

std::vector<std::string> MockChat::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ < 1) throw ConfigError("embedding dimension must be >= 1");
}

Embedding HashEmbedder::embed_one(std::string_view text) const {
    Rng rng(text::fnv1a64(text));
    Embedding v(dimension_);
    for (auto& x : v) x = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    normalize(v);
    return v;
}

std::vector<Embedding> HashEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw PreconditionError("embed requires at least one text");
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

void normalize(Embedding& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) throw ProviderError("cannot normalise a zero embedding");
    for (auto& x : v) x = static_cast<float>(x / norm);
}

ProviderConfig provider_config_from_json(const json& s) {
    ProviderConfig c;
    c.base_url = s.value("base_url", c.base_url);
    c.chat_model = s.value("chat_model", c.chat_model);
    c.embedding_model = s.value("embedding_model", c.embedding_model);
    c.embedding_dimension = s.value("embedding_dimension", c.embedding_dimension);
    c.api_key_env = s.value("api_key_env", c.api_key_env);
    c.timeout_seconds = s.value("timeout_seconds", c.timeout_seconds);
    c.max_retries = s.value("max_retries", c.max_retries);
    c.max_in_flight = s.value("max_in_flight", c.max_in_flight);
    c.embed_batch_size = s.value("embed_batch_size", c.embed_batch_size);
    c.temperature = s.value("temperature", c.temperature);
    if (s.contains("seed")) {
        c.seed = s["seed"].is_null() ? std::nullopt : std::optional<std::int64_t>(s["seed"].get<std::int64_t>());
    }
    validate(c);
    return c;
}

std::vector<MockRule> mock_rules_from_json(const json& rules) {
    std::vector<MockRule> out;
    if (rules.is_null()) return out;
    if (!rules.is_array()) throw ConfigError("mock chat rules must be an array");
    for (const auto& r : rules) {
        MockRule rule;
        rule.all_of = r.value("all_of", std::vector<std::string>{});
        rule.none_of = r.value("none_of", std::vector<std::string>{});
        if (!r.contains("response")) throw ConfigError("mock chat rule without a response");
        rule.response = r["response"].get<std::string>();
        out.push_back(std::move(rule));
    }
    return out;
}

Providers make_providers(const json& settings) {
    const auto kind = settings.value("kind", std::string("http"));
    try {
        if (kind == "mock") {
            return {std::make_shared<MockChat>(mock_rules_from_json(settings.value("chat", json::array()))),
                    std::make_shared<HashEmbedder>(settings.value("embedding_dimension", std::size_t{8}))};
        }
        if (kind == "http") {
            const auto config = provider_config_from_json(settings);
            auto limit = std::make_shared<ConcurrencyLimit>(config.max_in_flight);
            const auto policy = retry_policy(config);
            spdlog::debug("http provider: base_url={} chat_model={} embedding_model={}", config.base_url,
                          config.chat_model, config.embedding_model);
            return {std::make_shared<RetryingChatModel>(std::make_shared<HttpChatModel>(config, limit), policy),
                    std::make_shared<RetryingEmbedder>(std::make_shared<HttpEmbedder>(config, limit), policy)};
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid provider settings: ") + e.what());
    }
    throw ConfigError("unknown provider kind '" + kind + "' (expected http or mock)");
}

}  // namespace lclfqa
