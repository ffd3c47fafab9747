#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

#include "curator/corpus.hpp"
#include "curator/decimal.hpp"

namespace curator {

// ---------------------------------------------------------------------------
// Endpoint configuration

inline constexpr const char* kDefaultApiKeyEnv = "CURATOR_API_KEY";

struct JudgeEndpoint {
    /// `http(s)://host[:port]/path` for a chat-completion server, or
    /// `mock://grader[?granularity=0.5|1.0]` / `mock://judge` for the
    /// in-process deterministic backends.
    std::string base_url = "mock://grader";
    std::string model_name = "mock";
    std::string api_key_env = kDefaultApiKeyEnv;
    double temperature = 0.0;
    int max_tokens = 1024;
    int max_concurrency = 8;
    int requests_per_minute = 3500;

    bool is_mock() const { return base_url.starts_with("mock://"); }
    /// Throws ConfigError on out-of-range fields.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Requests

/// Metadata a caller attaches to a request. Never sent over the wire and
/// not part of the fingerprint; only the mock backends read it.
struct RequestTag {
    std::optional<SampleId> sample_id;
    std::optional<std::pair<std::string, std::string>> answers;
};

struct ChatRequest {
    std::string system;
    std::string user;
    RequestTag tag;
};

struct Completion {
    std::uint64_t fingerprint = 0;
    std::string reply;
    bool from_cache = false;
};

/// Hash of (model name, system prompt, user prompt, temperature).
std::uint64_t request_fingerprint(const JudgeEndpoint& endpoint, const ChatRequest& request);

/// JSON body for the chat-completion POST.
std::string build_request_body(const JudgeEndpoint& endpoint, const ChatRequest& request);
/// First choice's message content. Throws ProtocolError.
std::string extract_reply_text(std::string_view body);

// ---------------------------------------------------------------------------
// Time

/// Injectable clock so rate-limit and backoff logic can run on virtual time.
class Clock {
public:
    using duration = std::chrono::steady_clock::duration;
    using time_point = std::chrono::steady_clock::time_point;
    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_until(time_point t) = 0;
    void sleep_for(duration d) { sleep_until(now() + d); }
};

class SteadyClock final : public Clock {
public:
    time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_until(time_point t) override;
};

/// Process-wide real clock.
std::shared_ptr<Clock> system_clock();

// ---------------------------------------------------------------------------
// Rate limiting

/// Sliding-window log: at most `limit` acquisitions in any half-open window
/// of length `window`.
class RateLimiter {
public:
    RateLimiter(int limit, Clock::duration window, std::shared_ptr<Clock> clock);
    void acquire();

private:
    const std::size_t limit_;
    const Clock::duration window_;
    std::shared_ptr<Clock> clock_;
    std::mutex mu_;
    std::deque<Clock::time_point> stamps_;
};

/// Caps in-flight requests.
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(int limit);
    void acquire();
    void release();

    class Slot {
    public:
        explicit Slot(ConcurrencyGate& g) : g_(&g) { g_->acquire(); }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;
        ~Slot() { g_->release(); }

    private:
        ConcurrencyGate* g_;
    };

private:
    const int limit_;
    int in_flight_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

// ---------------------------------------------------------------------------
// Retry

struct RetryPolicy {
    Clock::duration base_delay = std::chrono::seconds(1);
    double factor = 2.0;
    int max_attempts = 5;

    /// Upper bound of the full-jitter delay after `failures` failed attempts.
    Clock::duration ceiling(int failures) const;
};

// ---------------------------------------------------------------------------
// Response cache

/// Append-only JSONL journal of successful replies keyed by fingerprint.
/// Opening replays the journal; a torn final line is ignored.
class ResponseCache {
public:
    /// Without a journal path the cache lives in memory only.
    explicit ResponseCache(std::optional<std::filesystem::path> journal = std::nullopt);

    std::optional<std::string> lookup(std::uint64_t fingerprint) const;
    void store(std::uint64_t fingerprint, const std::string& reply);
    std::size_t size() const;
    const std::optional<std::filesystem::path>& journal() const { return journal_; }

    /// Map reconstructed from a journal file.
    static std::unordered_map<std::uint64_t, std::string> replay(const std::filesystem::path& journal);

private:
    std::optional<std::filesystem::path> journal_;
    mutable std::mutex mu_;
    std::unordered_map<std::uint64_t, std::string> entries_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Transport

struct HttpResult {
    int status = 0;  // 0: no response (connect failure / timeout)
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post_json(const std::string& url, const std::string& bearer,
                                 const std::string& body) = 0;
};

/// cpp-httplib backed transport.
std::shared_ptr<Transport> make_http_transport(std::chrono::milliseconds timeout = std::chrono::seconds(120));

// ---------------------------------------------------------------------------
// Mock backends

/// Score for a sample under the deterministic mock grader: a "#score=X"
/// marker in the response wins, otherwise (id mod (5/granularity + 1)) * granularity.
/// Throws ValidationError for an out-of-scale marker or unsupported granularity.
Decimal mock_grade(const InstructionSample& sample, Decimal granularity);

/// First "#score=X" marker in `text`, if any. Throws ValidationError when X
/// is outside [0, 5] or not a number.
std::optional<Decimal> find_score_marker(std::string_view text);

/// Byte-length preference used by the mock judge: 1 + min(9, len / 40).
int mock_judge_score(std::string_view answer);

/// Reply text produced by the mock grader backend for a request.
std::string mock_grader_reply(const ChatRequest& request, Decimal granularity);
/// Reply text produced by the mock judge backend for a request.
std::string mock_judge_reply(const ChatRequest& request);

// ---------------------------------------------------------------------------
// Gateway

struct GatewayOptions {
    std::optional<std::filesystem::path> cache_path;
    RetryPolicy retry;
    std::shared_ptr<Clock> clock;          // defaults to system_clock()
    Clock::duration rate_window = std::chrono::seconds(60);
    std::shared_ptr<Transport> transport;  // defaults to make_http_transport()
    /// When set, at most this many uncached requests are dispatched; the
    /// next one throws BudgetExhausted.
    std::optional<std::size_t> request_budget;
};

struct GatewayStats {
    std::size_t dispatched = 0;  // attempts sent to a backend
    std::size_t retries = 0;
    std::size_t cache_hits = 0;
    std::size_t completed = 0;
};

/// Thread-safe chat-completion client with cache, rate limit, concurrency
/// cap, and retry.
class Gateway {
public:
    Gateway(JudgeEndpoint endpoint, GatewayOptions options = {});

    Completion complete(const ChatRequest& request);
    Completion complete(const std::string& system, const std::string& user) {
        return complete(ChatRequest{system, user, {}});
    }

    const JudgeEndpoint& endpoint() const { return endpoint_; }
    GatewayStats stats() const;
    ResponseCache& cache() { return cache_; }

private:
    std::string dispatch(const ChatRequest& request);
    std::string dispatch_http(const ChatRequest& request);

    JudgeEndpoint endpoint_;
    GatewayOptions options_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<Transport> transport_;
    ResponseCache cache_;
    RateLimiter limiter_;
    ConcurrencyGate gate_;
    Decimal mock_granularity_;

    mutable std::mutex mu_;
    GatewayStats stats_;
    std::size_t uncached_issued_ = 0;
    std::map<std::uint64_t, std::shared_future<std::string>> pending_;
};

}  // namespace curator
