#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "reviewkit/error.hpp"

namespace reviewkit::gateway {

// Pipeline stage a chat request belongs to; closed enum.
enum class StageTag {
    Questions,
    Analysis,
    QaReport,
    Reviewer,
    Reliability,
    Meta,
    Judge,
    Synthesis,
};

const char* to_string(StageTag tag);
StageTag stage_from_string(const std::string& s);

struct GenerationParams {
    double temperature = 0.4;
    long max_input_tokens = 100000;
    long max_output_tokens = 16384;
    std::optional<long> seed;
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    GenerationParams params;
    StageTag stage = StageTag::Meta;
};

struct ChatResponse {
    std::string text;
    long tokens_in = 0;
    long tokens_out = 0;
    std::string provider_id;
};

// Stable 64-bit content digest over both prompts; keys mock script entries.
std::uint64_t prompt_digest(const std::string& system_prompt, const std::string& user_prompt);

class ProviderFailure : public Error {
public:
    ProviderFailure(int status, const std::string& body)
        : Error(ErrorCode::ProviderError,
                "status " + std::to_string(status) + ": " + body),
          status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse send(const ChatRequest& req) = 0;
    virtual std::string provider_id() const = 0;
};

// ── Scripted mock backend ───────────────────────────────────────

// A marker rule fires when every listed substring appears in the request
// prompts; it lets a script react to injected content (attack markers,
// per-paper ids) that exact digests cannot anticipate.
struct MarkerRule {
    std::vector<std::string> contains;
    std::string text;
};

// Lookup order: exact digest entry, then marker rules, then stage fallback,
// then MockMiss.
struct MockScript {
    std::map<std::pair<StageTag, std::uint64_t>, std::string> entries;
    std::map<StageTag, std::vector<MarkerRule>> marker_rules;
    std::map<StageTag, std::string> fallback_by_stage;

    static MockScript load(const std::string& path);
};

struct CallRecord {
    StageTag stage;
    std::uint64_t digest;
    std::string system_prompt;
    std::string user_prompt;
    GenerationParams params;
};

class MockBackend : public Backend {
public:
    explicit MockBackend(MockScript script) : script_(std::move(script)) {}

    ChatResponse send(const ChatRequest& req) override;
    std::string provider_id() const override { return "mock"; }

    std::vector<CallRecord> call_log() const;
    void clear_log();

private:
    MockScript script_;
    mutable std::mutex mutex_;
    std::vector<CallRecord> log_;
};

// ── Retry & rate limiting ───────────────────────────────────────

// 3 attempts with 1s/2s/4s backoff by default; retries only timeouts and
// 5xx-class failures, 4xx fails fast.
struct RetryPolicy {
    int attempts = 3;
    std::vector<int> backoff_ms = {1000, 2000, 4000};
    std::function<void(int)> sleeper;  // injectable for tests; default sleeps
};

// Token bucket keyed per provider instance; requests_per_minute 0 disables.
// The one internally synchronized component shared across callers.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_minute = 0.0,
                         std::function<void(int)> sleeper = {});
    void acquire();

private:
    double rpm_;
    double tokens_;
    long long last_refill_us_;
    std::function<void(int)> sleeper_;
    std::mutex mutex_;
};

// Budget check, rate limit, retry wrapper around Backend::send.
ChatResponse complete(const ChatRequest& req, Backend& backend,
                      const RetryPolicy& retry = {}, RateLimiter* limiter = nullptr);

// Bundles a backend with its policies for pipeline use. The on_response
// hook observes every successful call (token accounting); it must be
// thread-safe when calls run concurrently.
struct Gateway {
    Backend* backend = nullptr;
    RetryPolicy retry;
    RateLimiter* limiter = nullptr;
    std::function<void(const ChatResponse&)> on_response;

    ChatResponse complete(const ChatRequest& req) const {
        ChatResponse resp = gateway::complete(req, *backend, retry, limiter);
        if (on_response) on_response(resp);
        return resp;
    }
};

// Deterministic tail truncation to a token budget. Appends a "[TRUNCATED]"
// marker (not counted against the budget) and never returns an empty text.
// Idempotent.
std::string truncate_to_budget(const std::string& text, long limit);

// ── HTTP backend (OpenAI-style chat completions) ────────────────

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://localhost:8080"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env;  // key read from this env var, never from files
    int timeout_ms = 120000;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ChatResponse send(const ChatRequest& req) override;
    std::string provider_id() const override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
};

// ── Provider configuration file ─────────────────────────────────

struct ProviderConfig {
    std::string kind = "mock";  // "mock" | "http"
    std::string mock_script_path;
    HttpBackendConfig http;
    double requests_per_minute = 0.0;
    RetryPolicy retry;
    GenerationParams params;
    std::map<StageTag, GenerationParams> stage_overrides;

    GenerationParams params_for(StageTag stage) const;
    static ProviderConfig load(const std::string& path);
    static ProviderConfig from_json_text(const std::string& text);
};

std::unique_ptr<Backend> make_backend(const ProviderConfig& config);

} // namespace reviewkit::gateway
