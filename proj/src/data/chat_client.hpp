#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace xkde::data {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;
};

// One chat-completion request. All fields participate in the cache key, so
// two requests differing only in seed are distinct cache entries (the seed
// is how quality-control regeneration asks for a fresh draw).
struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
    std::uint64_t seed = 0;
};

// Canonical serialization of a request; its SHA-256 is the cache key.
std::string request_fingerprint(const ChatRequest& request);

struct ChatStats {
    std::size_t requests = 0;      // complete() calls observed
    std::size_t cache_hits = 0;    // answered from the cache directory
    std::size_t service_calls = 0; // forwarded to the underlying service
    std::size_t retries = 0;       // extra attempts after transient failures
};

class ChatClient {
public:
    virtual ~ChatClient() = default;

    // Returns the completion text. Throws ServiceError (permanent) or
    // TransientServiceError (retryable by a caching wrapper).
    virtual std::string complete(const ChatRequest& request) = 0;

    virtual ChatStats stats() const = 0;
};

// Deterministic in-process stand-in for the generation/judging/translation
// service. It recognizes each pipeline prompt by its cue and fabricates a
// plausible completion from the substituted content, so the whole builder
// runs offline and reproducibly.
class MockChatClient : public ChatClient {
public:
    struct Behavior {
        // "[T]", "[F]", "both", or "none" - what the judge emits.
        std::string judge_verdict = "[T]";
        int score = 8;              // emitted for all four scoring fields
        int fail_first = 0;         // first n requests raise a transient error
        bool empty_completions = false;
        bool omit_oos_answer = false; // drop the "New answer:" line
    };

    MockChatClient() = default;
    explicit MockChatClient(Behavior behavior) : behavior_(behavior) {}

    std::string complete(const ChatRequest& request) override;
    ChatStats stats() const override;

private:
    Behavior behavior_;
    mutable std::mutex mutex_;
    ChatStats stats_;
};

// Content-addressed response cache plus retry policy around any transport.
// Transient failures are retried with exponential backoff (base 1s, factor
// 2, at most 5 attempts); responses are stored one file per request hash
// and reused before any service call.
class CachingChatClient : public ChatClient {
public:
    struct Retry {
        int max_attempts = 5;
        int base_delay_ms = 1000; // doubles per attempt
    };

    CachingChatClient(std::shared_ptr<ChatClient> inner, std::string cache_dir);
    CachingChatClient(std::shared_ptr<ChatClient> inner, std::string cache_dir, Retry retry);

    std::string complete(const ChatRequest& request) override;
    ChatStats stats() const override;

private:
    std::string cache_path(const ChatRequest& request) const;

    std::shared_ptr<ChatClient> inner_;
    std::string cache_dir_;
    Retry retry_;
    mutable std::mutex mutex_;
    ChatStats stats_;
};

// POSTs the de-facto chat-completion document to <endpoint><path> and reads
// choices[0].message.content back. The API key comes from the environment
// (XKDE_API_KEY) and is sent as a bearer token when present.
class HttpChatClient : public ChatClient {
public:
    struct Options {
        std::string endpoint;                      // e.g. "http://host:port"
        std::string path = "/v1/chat/completions"; // request path
        int timeout_s = 30;
        std::string api_key_env = "XKDE_API_KEY";
    };

    explicit HttpChatClient(Options options);

    std::string complete(const ChatRequest& request) override;
    ChatStats stats() const override;

private:
    Options options_;
    mutable std::mutex mutex_;
    ChatStats stats_;
};

} // namespace xkde::data
