#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "commdrop/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace commdrop {

namespace {

bool retryable_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

// Counting semaphore bounding in-flight requests.
class InflightGate {
public:
    explicit InflightGate(int limit) : limit_(limit < 1 ? 1 : limit) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

// Sliding-window limiter: at most `per_minute` request starts in any 60s.
class RateLimiter {
public:
    explicit RateLimiter(int per_minute) : per_minute_(per_minute) {}

    void wait_turn() {
        if (per_minute_ <= 0) return;
        using clock = std::chrono::steady_clock;
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            auto now = clock::now();
            while (!starts_.empty() && now - starts_.front() >= std::chrono::minutes(1))
                starts_.pop_front();
            if (int(starts_.size()) < per_minute_) {
                starts_.push_back(now);
                return;
            }
            auto wake = starts_.front() + std::chrono::minutes(1);
            cv_.wait_until(lock, wake);
        }
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int per_minute_;
    std::deque<std::chrono::steady_clock::time_point> starts_;
};

} // namespace

struct HttpBackend::Impl {
    HttpBackendConfig cfg;
    InflightGate gate;
    RateLimiter limiter;
    json extra_fields;

    explicit Impl(HttpBackendConfig c)
        : cfg(std::move(c)), gate(cfg.max_inflight), limiter(cfg.requests_per_minute) {
        if (cfg.base_url.empty()) throw ConfigError("http backend needs a base_url");
        if (cfg.model.empty()) throw ConfigError("http backend needs a model");
        if (cfg.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
        if (!cfg.extra_fields_json.empty()) {
            extra_fields = json::parse(cfg.extra_fields_json, nullptr, false);
            if (!extra_fields.is_object())
                throw ConfigError("extra_fields_json must be a JSON object");
        }
    }

    httplib::Client make_client() const {
        httplib::Client client(cfg.base_url);
        auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        if (!cfg.api_key.empty()) client.set_bearer_token_auth(cfg.api_key);
        return client;
    }
};

HttpBackend::HttpBackend(HttpBackendConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
HttpBackend::~HttpBackend() = default;

AgentReply HttpBackend::call_agent(const AgentProfile& profile,
                                   const std::string& rendered_prompt) {
    json body{
        {"model", impl_->cfg.model},
        {"messages",
         json::array({json{{"role", "system"}, {"content", "You are the " + profile.role_name + "."}},
                      json{{"role", "user"}, {"content", rendered_prompt}}})},
        {"temperature", profile.temperature},
    };
    for (auto& [key, value] : impl_->extra_fields.items()) body[key] = value;
    std::string payload = body.dump();

    auto started = std::chrono::steady_clock::now();
    int last_status = 0;
    std::string last_error;

    for (int attempt = 1; attempt <= impl_->cfg.max_attempts; ++attempt) {
        if (attempt > 1) {
            double backoff =
                impl_->cfg.initial_backoff_seconds * std::pow(2.0, double(attempt - 2));
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        }
        impl_->limiter.wait_turn();
        impl_->gate.acquire();
        httplib::Client client = impl_->make_client();
        httplib::Result res = client.Post(impl_->cfg.path, payload, "application/json");
        impl_->gate.release();

        if (!res) {
            last_status = 0;
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            if (retryable_status(res->status)) continue;
            throw BackendError("chat completion failed for agent '" + profile.agent_id +
                                   "': " + last_error,
                               res->status);
        }

        json doc = json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
            doc["choices"].empty())
            throw BackendError("malformed chat completion response for agent '" +
                                   profile.agent_id + "'",
                               res->status);

        AgentReply reply;
        reply.content = doc["choices"][0].value("message", json::object()).value("content", "");
        if (doc.contains("usage") && doc["usage"].is_object() &&
            doc["usage"].contains("prompt_tokens") &&
            doc["usage"].contains("completion_tokens")) {
            reply.usage.prompt_tokens = doc["usage"]["prompt_tokens"].get<long>();
            reply.usage.completion_tokens = doc["usage"]["completion_tokens"].get<long>();
            reply.usage.estimated = false;
        } else {
            reply.usage.prompt_tokens = estimate_tokens(rendered_prompt);
            reply.usage.completion_tokens = estimate_tokens(reply.content);
            reply.usage.estimated = true;
        }
        reply.latency_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
        return reply;
    }

    throw BackendError("chat completion failed for agent '" + profile.agent_id + "' after " +
                           std::to_string(impl_->cfg.max_attempts) + " attempts: " + last_error,
                       last_status);
}

} // namespace commdrop
