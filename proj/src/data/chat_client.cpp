#include "data/chat_client.hpp"

#include <chrono>
#include <filesystem>
#include <json.hpp>
#include <thread>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "common/sha256.hpp"
#include "core/record_io.hpp"

// httplib pulls in system sockets; keep it out of the public header.
#include <httplib.h>

namespace xkde::data {

namespace {

bool ends_with(const std::string& text, const std::string& suffix) {
    return text.size() >= suffix.size() &&
           text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Substring between the last occurrence of `from` and the next `to` after it.
std::string between_last(const std::string& text, const std::string& from,
                         const std::string& to) {
    const std::size_t start = text.rfind(from);
    if (start == std::string::npos) return "";
    const std::size_t value = start + from.size();
    const std::size_t end = text.find(to, value);
    if (end == std::string::npos) return text.substr(value);
    return text.substr(value, end - value);
}

// Substring between the first occurrence of `from` and the next `to` after it.
std::string between_first(const std::string& text, const std::string& from,
                          const std::string& to) {
    const std::size_t start = text.find(from);
    if (start == std::string::npos) return "";
    const std::size_t value = start + from.size();
    const std::size_t end = text.find(to, value);
    if (end == std::string::npos) return text.substr(value);
    return text.substr(value, end - value);
}

const std::string& user_content(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == "user") return it->content;
    }
    throw ServiceError("chat request carries no user message");
}

} // namespace

std::string request_fingerprint(const ChatRequest& request) {
    nlohmann::ordered_json doc;
    doc["model"] = request.model;
    doc["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : request.messages) {
        doc["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    doc["temperature"] = request.temperature;
    doc["max_tokens"] = request.max_tokens;
    doc["seed"] = request.seed;
    return doc.dump();
}

// ---------------------------------------------------------------------------
// MockChatClient
// ---------------------------------------------------------------------------

std::string MockChatClient::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.requests;
        ++stats_.service_calls;
        if (static_cast<int>(stats_.requests) <= behavior_.fail_first) {
            throw TransientServiceError("simulated transient service failure");
        }
    }
    if (behavior_.empty_completions) return "";

    const std::string& prompt = user_content(request);

    if (ends_with(prompt, "[Generated Question]: ")) {
        const std::string subject = between_last(
            prompt, "Please generate a question related to ", ". The question should not");
        static const char* shapes[] = {
            "What is now recorded about %?",
            "According to the latest records, what is known about %?",
            "What does the updated record say about %?",
        };
        std::string shape = shapes[request.seed % 3];
        return shape.replace(shape.find('%'), 1, subject);
    }

    if (ends_with(prompt, "[Generated Answer]: ")) {
        const std::string target = between_last(prompt, ", with ", " as secondary");
        if (target.empty()) throw ServiceError("mock answer prompt lacks its focus line");
        return target;
    }

    if (prompt.find("\n[Changed Answer]: ") != std::string::npos &&
        prompt.rfind("In the following statements", 0) == 0) {
        const std::string subject = between_last(prompt, "[Subject]: ", "\n");
        static const char* wings[] = {"north", "south", "east", "west", "annex"};
        std::size_t h = 0;
        for (unsigned char c : subject) h += c;
        const std::string wing = wings[h % 5];
        std::string out = "Irrelevant attribute recalled: archive wing\n\n";
        out += "New question: Which archive wing holds the file on " + subject + "?\n\n";
        if (!behavior_.omit_oos_answer) out += "New answer: the " + wing + " wing\n";
        return out;
    }

    if (prompt.find("Please act as a fair judge and determine") != std::string::npos) {
        if (behavior_.judge_verdict == "[T]") return "The answer follows the edit. [T]";
        if (behavior_.judge_verdict == "[F]") return "The answer ignores the edit. [F]";
        if (behavior_.judge_verdict == "both") return "Hard to say. [T] [F]";
        return "No verdict either way.";
    }

    if (prompt.find("Please act as a fair judge and rate") != std::string::npos) {
        const std::string s = std::to_string(behavior_.score);
        return "[Sentence complexity: " + s + "; Vocabulary richness: " + s +
               "; Faithfulness: " + s + "; Overall score: " + s + "]";
    }

    if (ends_with(prompt, "[Translation]: ")) {
        // The language pair lives on the instruction line, which precedes
        // the payload; the payload may itself contain " to ", so parse from
        // the first occurrence, not the last.
        const std::string tgt = between_first(prompt, " to ", ". Keep proper names");
        const std::string text = between_last(prompt, "[Text]: ", "\n[Translation]: ");
        return "⟦" + tgt + ":" + text + "⟧"; // ⟦tgt:text⟧
    }

    throw ServiceError("mock client does not recognize this prompt");
}

ChatStats MockChatClient::stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

// ---------------------------------------------------------------------------
// CachingChatClient
// ---------------------------------------------------------------------------

CachingChatClient::CachingChatClient(std::shared_ptr<ChatClient> inner, std::string cache_dir)
    : CachingChatClient(std::move(inner), std::move(cache_dir), Retry{}) {}

CachingChatClient::CachingChatClient(std::shared_ptr<ChatClient> inner, std::string cache_dir,
                                     Retry retry)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)), retry_(retry) {
    if (!inner_) throw ConfigError("caching client needs an inner transport");
    if (retry_.max_attempts < 1) throw ConfigError("retry budget must be at least 1");
    std::filesystem::create_directories(cache_dir_);
}

std::string CachingChatClient::cache_path(const ChatRequest& request) const {
    return cache_dir_ + "/" + sha256_hex(request_fingerprint(request)) + ".json";
}

std::string CachingChatClient::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.requests;
    }
    const std::string path = cache_path(request);
    if (std::filesystem::exists(path)) {
        const auto doc = nlohmann::json::parse(read_file(path));
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.cache_hits;
        return doc.at("completion").get<std::string>();
    }

    std::string completion;
    for (int attempt = 1;; ++attempt) {
        try {
            completion = inner_->complete(request);
            std::lock_guard<std::mutex> lock(mutex_);
            ++stats_.service_calls;
            break;
        } catch (const TransientServiceError& e) {
            {
                std::lock_guard<std::mutex> lock(mutex_);
                ++stats_.retries;
            }
            if (attempt >= retry_.max_attempts) {
                throw ServiceError("service still failing after " +
                                   std::to_string(retry_.max_attempts) +
                                   " attempts: " + e.what());
            }
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(retry_.base_delay_ms) << (attempt - 1));
            log_warn(std::string("transient service failure, retrying: ") + e.what());
            std::this_thread::sleep_for(delay);
        }
    }

    nlohmann::ordered_json doc;
    doc["fingerprint"] = request_fingerprint(request);
    doc["completion"] = completion;
    atomic_write_file(path, doc.dump());
    return completion;
}

ChatStats CachingChatClient::stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

// ---------------------------------------------------------------------------
// HttpChatClient
// ---------------------------------------------------------------------------

HttpChatClient::HttpChatClient(Options options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) throw ConfigError("chat endpoint must be set");
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.requests;
        ++stats_.service_calls;
    }
    nlohmann::ordered_json body;
    body["model"] = request.model;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["seed"] = request.seed;

    httplib::Client client(options_.endpoint);
    client.set_connection_timeout(options_.timeout_s);
    client.set_read_timeout(options_.timeout_s);
    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto res = client.Post(options_.path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransientServiceError("no response from " + options_.endpoint + ": " +
                                    httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientServiceError("service returned status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ServiceError("service returned status " + std::to_string(res->status) + ": " +
                           res->body);
    }
    try {
        const auto doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError(std::string("malformed completion document: ") + e.what());
    }
}

ChatStats HttpChatClient::stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

} // namespace xkde::data
