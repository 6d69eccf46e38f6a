#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace kgfit {

/// Text-in, text-out chat completion.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic offline backend. The response is a pure function of the
/// prompt text and the policy.
///
/// Policies: never-split, halve-lexicographic, always-noupdate,
/// merge-biased, always-leafmerge, echo (alias of never-split), and
/// random:<seed> (schema-valid but arbitrary splits and actions, seeded by
/// the prompt hash).
class MockClient : public ChatClient {
public:
    explicit MockClient(std::string policy);
    std::string complete(const std::string& prompt) override;
    const std::string& policy() const { return policy_; }

private:
    std::string policy_;
    std::uint64_t random_seed_ = 0;
};

/// Adapter for tests and custom policies.
class CallbackClient : public ChatClient {
public:
    explicit CallbackClient(std::function<std::string(const std::string&)> fn)
        : fn_(std::move(fn)) {}
    std::string complete(const std::string& prompt) override { return fn_(prompt); }

private:
    std::function<std::string(const std::string&)> fn_;
};

/// Replay cache line: {"key": sha256(prompt), "prompt": ..., "response": ...}.
std::string replay_key(const std::string& prompt);

/// Serves responses from a replay cache; a missing prompt raises
/// CacheMissError.
class ReplayClient : public ChatClient {
public:
    explicit ReplayClient(const std::filesystem::path& cache_path);
    std::string complete(const std::string& prompt) override;
    std::size_t size() const { return responses_.size(); }

private:
    std::map<std::string, std::string> responses_;
};

/// Forwards to an inner client and appends every exchange to a replay
/// cache. Appends are serialized.
class RecordingClient : public ChatClient {
public:
    RecordingClient(std::unique_ptr<ChatClient> inner, std::filesystem::path cache_path);
    std::string complete(const std::string& prompt) override;

private:
    std::unique_ptr<ChatClient> inner_;
    std::filesystem::path cache_path_;
    std::mutex mutex_;
};

struct LiveSettings {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string token_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{60};
    int max_retries = 2;
    std::chrono::milliseconds initial_backoff{1000};
    std::chrono::milliseconds max_backoff{30000};
};

/// Chat-completions request over HTTP(S): POST {model, messages:[{role:
/// "user", content}], temperature: 0}; reads choices[0].message.content.
/// Transport failures and 5xx/429 are retried with capped exponential
/// backoff; anything else raises ClientError.
class LiveClient : public ChatClient {
public:
    explicit LiveClient(LiveSettings settings);
    std::string complete(const std::string& prompt) override;

private:
    LiveSettings settings_;
    std::string token_;
};

/// Builds a client from `live`, `replay:<path>` or `mock:<policy>`. Every
/// exchange is appended to `cache_path` when it is non-empty.
std::unique_ptr<ChatClient> make_client(const std::string& backend, const LiveSettings& live = {},
                                        const std::filesystem::path& cache_path = {});

}  // namespace kgfit
