#include "reviewkit/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "reviewkit/text.hpp"

namespace reviewkit::gateway {

const char* to_string(StageTag tag) {
    switch (tag) {
        case StageTag::Questions: return "questions";
        case StageTag::Analysis: return "analysis";
        case StageTag::QaReport: return "qa_report";
        case StageTag::Reviewer: return "reviewer";
        case StageTag::Reliability: return "reliability";
        case StageTag::Meta: return "meta";
        case StageTag::Judge: return "judge";
        case StageTag::Synthesis: return "synthesis";
    }
    return "meta";
}

StageTag stage_from_string(const std::string& s) {
    if (s == "questions") return StageTag::Questions;
    if (s == "analysis") return StageTag::Analysis;
    if (s == "qa_report") return StageTag::QaReport;
    if (s == "reviewer") return StageTag::Reviewer;
    if (s == "reliability") return StageTag::Reliability;
    if (s == "meta") return StageTag::Meta;
    if (s == "judge") return StageTag::Judge;
    if (s == "synthesis") return StageTag::Synthesis;
    throw Error(ErrorCode::ConfigError, "unknown stage tag: " + s);
}

std::uint64_t prompt_digest(const std::string& system_prompt, const std::string& user_prompt) {
    std::string joined;
    joined.reserve(system_prompt.size() + 1 + user_prompt.size());
    joined += system_prompt;
    joined += '\x1f';
    joined += user_prompt;
    return fnv1a64(joined);
}

// ── MockScript ──────────────────────────────────────────────────

MockScript MockScript::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open mock script " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::FormatError, "mock script " + path + ": " + e.what());
    }
    MockScript script;
    if (j.contains("entries")) {
        for (const auto& entry : j["entries"]) {
            StageTag stage = stage_from_string(entry.at("stage").get<std::string>());
            std::uint64_t digest = 0;
            const auto& dj = entry.at("digest");
            if (dj.is_string()) {
                digest = std::stoull(dj.get<std::string>());
            } else {
                digest = dj.get<std::uint64_t>();
            }
            script.entries[{stage, digest}] = entry.at("text").get<std::string>();
        }
    }
    if (j.contains("marker_rules")) {
        for (const auto& rule : j["marker_rules"]) {
            StageTag stage = stage_from_string(rule.at("stage").get<std::string>());
            MarkerRule r;
            const auto& cj = rule.at("contains");
            if (cj.is_string()) {
                r.contains.push_back(cj.get<std::string>());
            } else {
                for (const auto& c : cj) r.contains.push_back(c.get<std::string>());
            }
            r.text = rule.at("text").get<std::string>();
            script.marker_rules[stage].push_back(std::move(r));
        }
    }
    if (j.contains("fallbacks")) {
        for (const auto& [key, value] : j["fallbacks"].items()) {
            script.fallback_by_stage[stage_from_string(key)] = value.get<std::string>();
        }
    }
    return script;
}

ChatResponse MockBackend::send(const ChatRequest& req) {
    const std::uint64_t digest = prompt_digest(req.system_prompt, req.user_prompt);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        log_.push_back({req.stage, digest, req.system_prompt, req.user_prompt, req.params});
    }

    const std::string* text = nullptr;
    if (auto it = script_.entries.find({req.stage, digest}); it != script_.entries.end()) {
        text = &it->second;
    }
    if (!text) {
        if (auto it = script_.marker_rules.find(req.stage); it != script_.marker_rules.end()) {
            for (const auto& rule : it->second) {
                bool all = true;
                for (const auto& needle : rule.contains) {
                    if (req.system_prompt.find(needle) == std::string::npos &&
                        req.user_prompt.find(needle) == std::string::npos) {
                        all = false;
                        break;
                    }
                }
                if (all) {
                    text = &rule.text;
                    break;
                }
            }
        }
    }
    if (!text) {
        if (auto it = script_.fallback_by_stage.find(req.stage);
            it != script_.fallback_by_stage.end()) {
            text = &it->second;
        }
    }
    if (!text) {
        throw Error(ErrorCode::MockMiss, std::string(to_string(req.stage)) + " (digest " +
                                             std::to_string(digest) + ")");
    }

    ChatResponse resp;
    resp.text = *text;
    resp.tokens_in = token_estimate(req.system_prompt) + token_estimate(req.user_prompt);
    resp.tokens_out = token_estimate(resp.text);
    resp.provider_id = "mock";
    return resp;
}

std::vector<CallRecord> MockBackend::call_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
}

void MockBackend::clear_log() {
    std::lock_guard<std::mutex> lock(mutex_);
    log_.clear();
}

// ── Rate limiter ────────────────────────────────────────────────

namespace {

long long now_us() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void default_sleep(int ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

} // namespace

RateLimiter::RateLimiter(double requests_per_minute, std::function<void(int)> sleeper)
    : rpm_(requests_per_minute),
      tokens_(requests_per_minute),
      last_refill_us_(now_us()),
      sleeper_(sleeper ? std::move(sleeper) : default_sleep) {}

void RateLimiter::acquire() {
    if (rpm_ <= 0) return;
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        const long long now = now_us();
        const double elapsed_min = static_cast<double>(now - last_refill_us_) / 60e6;
        tokens_ = std::min(rpm_, tokens_ + elapsed_min * rpm_);
        last_refill_us_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double deficit_min = (1.0 - tokens_) / rpm_;
        const int wait_ms = static_cast<int>(deficit_min * 60e3) + 1;
        lock.unlock();
        sleeper_(wait_ms);
        lock.lock();
    }
}

// ── complete ────────────────────────────────────────────────────

ChatResponse complete(const ChatRequest& req, Backend& backend, const RetryPolicy& retry,
                      RateLimiter* limiter) {
    if (req.system_prompt.empty() || req.user_prompt.empty()) {
        throw Error(ErrorCode::FormatError, "chat prompts must be non-empty");
    }
    const long estimate = token_estimate(req.user_prompt);
    if (estimate > req.params.max_input_tokens) {
        throw Error(ErrorCode::InputTooLong,
                    std::to_string(estimate) + " estimated tokens > limit " +
                        std::to_string(req.params.max_input_tokens));
    }

    const auto sleeper = retry.sleeper ? retry.sleeper : default_sleep;
    const int attempts = std::max(1, retry.attempts);
    for (int attempt = 0;; ++attempt) {
        if (limiter) limiter->acquire();
        try {
            ChatResponse resp = backend.send(req);
            if (resp.text.empty()) throw ProviderFailure(500, "empty response text");
            return resp;
        } catch (const Error& e) {
            const bool transient =
                e.code() == ErrorCode::Timeout ||
                (e.code() == ErrorCode::ProviderError &&
                 dynamic_cast<const ProviderFailure*>(&e) != nullptr &&
                 static_cast<const ProviderFailure&>(e).status() >= 500);
            if (!transient || attempt + 1 >= attempts) throw;
            const int delay = attempt < static_cast<int>(retry.backoff_ms.size())
                                  ? retry.backoff_ms[attempt]
                                  : (retry.backoff_ms.empty() ? 1000 : retry.backoff_ms.back());
            sleeper(delay);
        }
    }
}

// ── truncate_to_budget ──────────────────────────────────────────

std::string truncate_to_budget(const std::string& text, long limit) {
    if (limit < 1) throw Error(ErrorCode::OutOfRange, "truncation limit must be >= 1");
    if (token_estimate(text) <= limit) return text;

    // Largest word count whose estimate fits; keep at least one word so the
    // result is never marker-only.
    long keep = static_cast<long>(static_cast<double>(limit) / 1.3);
    if (keep < 1) keep = 1;

    const auto words = split_words(text);
    if (keep >= static_cast<long>(words.size())) return text;

    std::string out;
    for (long i = 0; i < keep; ++i) {
        if (i) out += ' ';
        out += words[static_cast<size_t>(i)];
    }
    out += " [TRUNCATED]";
    return out;
}

// ── HTTP backend ────────────────────────────────────────────────

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            api_key_ = key;
        }
    }
}

std::string HttpBackend::provider_id() const {
    return config_.model.empty() ? "http" : config_.model;
}

ChatResponse HttpBackend::send(const ChatRequest& req) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    nlohmann::json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::json::array({
        nlohmann::json{{"role", "system"}, {"content", req.system_prompt}},
        nlohmann::json{{"role", "user"}, {"content", req.user_prompt}},
    });
    body["temperature"] = req.params.temperature;
    body["max_tokens"] = req.params.max_output_tokens;
    if (req.params.seed) body["seed"] = *req.params.seed;

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto result = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!result) {
        const auto err = result.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
            throw Error(ErrorCode::Timeout, httplib::to_string(err));
        }
        throw ProviderFailure(599, httplib::to_string(err));
    }
    if (result->status < 200 || result->status >= 300) {
        throw ProviderFailure(result->status, result->body);
    }

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(result->body);
    } catch (const std::exception& e) {
        throw ProviderFailure(result->status, std::string("bad JSON: ") + e.what());
    }

    ChatResponse resp;
    try {
        resp.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw ProviderFailure(result->status, std::string("unexpected shape: ") + e.what());
    }
    if (j.contains("usage")) {
        resp.tokens_in = j["usage"].value("prompt_tokens", 0);
        resp.tokens_out = j["usage"].value("completion_tokens", 0);
    }
    if (resp.tokens_in == 0) {
        resp.tokens_in = token_estimate(req.system_prompt) + token_estimate(req.user_prompt);
    }
    if (resp.tokens_out == 0) resp.tokens_out = token_estimate(resp.text);
    resp.provider_id = provider_id();
    return resp;
}

// ── Provider config ─────────────────────────────────────────────

namespace {

GenerationParams params_from_json(const nlohmann::json& j, GenerationParams base) {
    if (j.contains("temperature")) base.temperature = j["temperature"].get<double>();
    if (j.contains("max_input_tokens")) base.max_input_tokens = j["max_input_tokens"].get<long>();
    if (j.contains("max_output_tokens"))
        base.max_output_tokens = j["max_output_tokens"].get<long>();
    if (j.contains("seed") && !j["seed"].is_null()) base.seed = j["seed"].get<long>();
    if (base.max_output_tokens < 1) {
        throw Error(ErrorCode::ConfigError, "max_output_tokens must be >= 1");
    }
    return base;
}

} // namespace

GenerationParams ProviderConfig::params_for(StageTag stage) const {
    auto it = stage_overrides.find(stage);
    return it != stage_overrides.end() ? it->second : params;
}

ProviderConfig ProviderConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open provider config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ConfigError, "provider config " + path + ": " + e.what());
    }
    return from_json_text(j.dump());
}

ProviderConfig ProviderConfig::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ProviderConfig config;
    config.kind = j.value("provider", "mock");
    if (config.kind != "mock" && config.kind != "http") {
        throw Error(ErrorCode::ConfigError, "provider must be 'mock' or 'http'");
    }
    config.mock_script_path = j.value("mock_script", "");
    if (j.contains("base_url")) config.http.base_url = j["base_url"].get<std::string>();
    if (j.contains("path")) config.http.path = j["path"].get<std::string>();
    if (j.contains("model")) config.http.model = j["model"].get<std::string>();
    if (j.contains("api_key_env")) config.http.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("timeout_ms")) config.http.timeout_ms = j["timeout_ms"].get<int>();
    config.requests_per_minute = j.value("requests_per_minute", 0.0);
    if (j.contains("retry")) {
        const auto& rj = j["retry"];
        if (rj.contains("attempts")) config.retry.attempts = rj["attempts"].get<int>();
        if (rj.contains("backoff_ms")) {
            config.retry.backoff_ms = rj["backoff_ms"].get<std::vector<int>>();
        }
    }
    if (j.contains("params")) config.params = params_from_json(j["params"], config.params);
    if (j.contains("stage_overrides")) {
        for (const auto& [key, value] : j["stage_overrides"].items()) {
            config.stage_overrides[stage_from_string(key)] =
                params_from_json(value, config.params);
        }
    }
    if (config.kind == "http" && config.http.base_url.empty()) {
        throw Error(ErrorCode::ConfigError, "http provider requires base_url");
    }
    return config;
}

std::unique_ptr<Backend> make_backend(const ProviderConfig& config) {
    if (config.kind == "mock") {
        if (config.mock_script_path.empty()) {
            throw Error(ErrorCode::ConfigError, "mock provider requires mock_script");
        }
        return std::make_unique<MockBackend>(MockScript::load(config.mock_script_path));
    }
    return std::make_unique<HttpBackend>(config.http);
}

} // namespace reviewkit::gateway
