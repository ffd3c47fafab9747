#include "curator/gateway.hpp"

#include <cstdlib>
#include <random>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "curator/errors.hpp"
#include "curator/hash.hpp"

namespace curator {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------

void JudgeEndpoint::validate() const {
    if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ConfigError(fmt::format("temperature {} outside [0, 2]", temperature));
    }
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (requests_per_minute < 1) throw ConfigError("requests_per_minute must be >= 1");
    if (!is_mock() && !base_url.starts_with("http://") && !base_url.starts_with("https://")) {
        throw ConfigError("endpoint base_url must be http(s):// or mock://, got " + base_url);
    }
}

std::uint64_t request_fingerprint(const JudgeEndpoint& endpoint, const ChatRequest& request) {
    auto temp = fmt::format("{:.6f}", endpoint.temperature);
    return fnv1a_fields(endpoint.model_name, request.system, request.user, temp);
}

std::string build_request_body(const JudgeEndpoint& endpoint, const ChatRequest& request) {
    json messages = json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    json body;
    body["model"] = endpoint.model_name;
    body["messages"] = std::move(messages);
    body["temperature"] = endpoint.temperature;
    body["max_tokens"] = endpoint.max_tokens;
    return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string extract_reply_text(std::string_view body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw ProtocolError("reply body is not JSON");
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw ProtocolError("choices[0].message.content is not a string");
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("unexpected reply shape: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

void SteadyClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

std::shared_ptr<Clock> system_clock() {
    static auto clock = std::make_shared<SteadyClock>();
    return clock;
}

RateLimiter::RateLimiter(int limit, Clock::duration window, std::shared_ptr<Clock> clock)
    : limit_(static_cast<std::size_t>(std::max(limit, 1))), window_(window), clock_(std::move(clock)) {}

void RateLimiter::acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = clock_->now();
        while (!stamps_.empty() && stamps_.front() <= now - window_) stamps_.pop_front();
        if (stamps_.size() < limit_) {
            stamps_.push_back(now);
            return;
        }
        auto wake = stamps_.front() + window_;
        lock.unlock();
        clock_->sleep_until(wake);
        lock.lock();
    }
}

ConcurrencyGate::ConcurrencyGate(int limit) : limit_(std::max(limit, 1)) {}

void ConcurrencyGate::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
}

void ConcurrencyGate::release() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_one();
}

Clock::duration RetryPolicy::ceiling(int failures) const {
    double scale = 1.0;
    for (int i = 1; i < failures; ++i) scale *= factor;
    return std::chrono::duration_cast<Clock::duration>(base_delay * scale);
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::optional<std::filesystem::path> journal) : journal_(std::move(journal)) {
    if (!journal_) return;
    if (std::filesystem::exists(*journal_)) entries_ = replay(*journal_);
    if (journal_->has_parent_path()) std::filesystem::create_directories(journal_->parent_path());
    out_.open(*journal_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open cache journal " + journal_->string());
    // terminate a torn last line so the next entry starts clean
    if (std::filesystem::exists(*journal_) && std::filesystem::file_size(*journal_) > 0) {
        std::ifstream tail(*journal_, std::ios::binary);
        tail.seekg(-1, std::ios::end);
        if (tail.get() != '\n') out_ << '\n';
    }
}

std::unordered_map<std::uint64_t, std::string> ResponseCache::replay(const std::filesystem::path& journal) {
    std::unordered_map<std::uint64_t, std::string> map;
    std::ifstream in(journal, std::ios::binary);
    if (!in) throw IoError("cannot open cache journal " + journal.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        std::optional<std::uint64_t> fp;
        if (!rec.is_discarded() && rec.contains("fingerprint") && rec["fingerprint"].is_string() &&
            rec.contains("reply") && rec["reply"].is_string()) {
            fp = from_hex(rec["fingerprint"].get<std::string>());
        }
        if (!fp) {
            spdlog::warn("{}:{}: skipping unreadable cache entry", journal.string(), line_no);
            continue;
        }
        map[*fp] = rec["reply"].get<std::string>();
    }
    return map;
}

std::optional<std::string> ResponseCache::lookup(std::uint64_t fingerprint) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(fingerprint);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(std::uint64_t fingerprint, const std::string& reply) {
    std::lock_guard lock(mu_);
    if (!entries_.emplace(fingerprint, reply).second) return;
    if (!out_.is_open()) return;
    json rec;
    rec["fingerprint"] = to_hex(fingerprint);
    rec["reply"] = reply;
    rec["created_at"] = fmt::format("{:%Y-%m-%dT%H:%M:%S}Z",
                                    fmt::gmtime(std::chrono::system_clock::to_time_t(
                                        std::chrono::system_clock::now())));
    out_ << rec.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    out_.flush();
    if (!out_) throw IoError("cache journal write failed: " + journal_->string());
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

// ---------------------------------------------------------------------------

std::optional<Decimal> find_score_marker(std::string_view text) {
    constexpr std::string_view kMarker = "#score=";
    auto pos = text.find(kMarker);
    if (pos == std::string_view::npos) return std::nullopt;
    std::size_t begin = pos + kMarker.size();
    std::size_t end = begin;
    while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) || text[end] == '.' ||
                                 text[end] == '-')) {
        ++end;
    }
    auto token = text.substr(begin, end - begin);
    while (!token.empty() && token.back() == '.') token.remove_suffix(1);
    auto value = Decimal::parse(token);
    if (!value) throw ValidationError("score marker is not a number: #score=" + std::string(token));
    if (*value < Decimal::from_int(0) || *value > Decimal::from_int(5)) {
        throw ValidationError("score marker outside [0, 5]: #score=" + std::string(token));
    }
    return value;
}

namespace {

void check_granularity(Decimal g) {
    if (g != Decimal::from_tenths(5) && g != Decimal::from_int(1)) {
        throw ValidationError("granularity must be 0.5 or 1.0, got " + g.to_string());
    }
}

Decimal grid_score(std::uint64_t key, Decimal granularity) {
    auto steps = static_cast<std::uint64_t>(Decimal::from_int(5).units() / granularity.units());
    return granularity * static_cast<std::int64_t>(key % (steps + 1));
}

std::string scored_reply(Decimal score) {
    return score.to_string() + ". Deterministic mock explanation.";
}

Decimal granularity_from_url(const std::string& url) {
    auto pos = url.find("granularity=");
    if (pos == std::string::npos) return Decimal::from_tenths(5);
    auto value = Decimal::parse(std::string_view(url).substr(pos + 12));
    if (!value) throw ConfigError("bad granularity in " + url);
    check_granularity(*value);
    return *value;
}

}  // namespace

Decimal mock_grade(const InstructionSample& sample, Decimal granularity) {
    check_granularity(granularity);
    if (auto marked = find_score_marker(sample.response)) return *marked;
    return grid_score(sample.id, granularity);
}

int mock_judge_score(std::string_view answer) {
    return 1 + static_cast<int>(std::min<std::size_t>(9, answer.size() / 40));
}

std::string mock_grader_reply(const ChatRequest& request, Decimal granularity) {
    std::optional<Decimal> marked;
    try {
        marked = find_score_marker(request.user);
    } catch (const ValidationError& e) {
        spdlog::debug("mock grader: {}", e.what());
        return "Cannot rate this response: invalid score marker.";
    }
    if (marked) return scored_reply(*marked);
    if (request.tag.sample_id) return scored_reply(grid_score(*request.tag.sample_id, granularity));
    return scored_reply(grid_score(fnv1a_fields(request.system, request.user), granularity));
}

std::string mock_judge_reply(const ChatRequest& request) {
    if (!request.tag.answers) return "No answers supplied.";
    int a = mock_judge_score(request.tag.answers->first);
    int b = mock_judge_score(request.tag.answers->second);
    const char* verdict = a > b ? "[[A]]" : a < b ? "[[B]]" : "[[C]]";
    return fmt::format("{} {}\nThe mock judge prefers the longer answer. {}", a, b, verdict);
}

// ---------------------------------------------------------------------------

Gateway::Gateway(JudgeEndpoint endpoint, GatewayOptions options)
    : endpoint_(std::move(endpoint)),
      options_(std::move(options)),
      clock_(options_.clock ? options_.clock : system_clock()),
      transport_(options_.transport),
      cache_(options_.cache_path),
      limiter_(endpoint_.requests_per_minute, options_.rate_window, clock_),
      gate_(endpoint_.max_concurrency) {
    endpoint_.validate();
    if (endpoint_.is_mock()) {
        mock_granularity_ = granularity_from_url(endpoint_.base_url);
    } else if (!transport_) {
        transport_ = make_http_transport();
    }
}

GatewayStats Gateway::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

Completion Gateway::complete(const ChatRequest& request) {
    const auto fp = request_fingerprint(endpoint_, request);
    if (auto hit = cache_.lookup(fp)) {
        std::lock_guard lock(mu_);
        ++stats_.cache_hits;
        return {fp, std::move(*hit), true};
    }

    std::promise<std::string> promise;
    {
        std::unique_lock lock(mu_);
        if (auto it = pending_.find(fp); it != pending_.end()) {
            auto shared = it->second;
            ++stats_.cache_hits;
            lock.unlock();
            return {fp, shared.get(), true};
        }
        if (auto hit = cache_.lookup(fp)) {
            ++stats_.cache_hits;
            return {fp, std::move(*hit), true};
        }
        if (options_.request_budget && uncached_issued_ >= *options_.request_budget) {
            throw BudgetExhausted(fmt::format("request budget of {} exhausted", *options_.request_budget));
        }
        ++uncached_issued_;
        pending_.emplace(fp, promise.get_future().share());
    }

    auto finish = [&] {
        std::lock_guard lock(mu_);
        pending_.erase(fp);
    };
    std::string reply;
    try {
        reply = dispatch(request);
        cache_.store(fp, reply);
    } catch (...) {
        promise.set_exception(std::current_exception());
        finish();
        throw;
    }
    promise.set_value(reply);
    finish();
    {
        std::lock_guard lock(mu_);
        ++stats_.completed;
    }
    return {fp, std::move(reply), false};
}

std::string Gateway::dispatch(const ChatRequest& request) {
    if (!endpoint_.is_mock()) return dispatch_http(request);
    {
        std::lock_guard lock(mu_);
        ++stats_.dispatched;
    }
    if (endpoint_.base_url.starts_with("mock://judge")) return mock_judge_reply(request);
    return mock_grader_reply(request, mock_granularity_);
}

std::string Gateway::dispatch_http(const ChatRequest& request) {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw AuthError("API key environment variable " + endpoint_.api_key_env + " is not set");
    }
    const std::string body = build_request_body(endpoint_, request);
    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};

    std::string last_failure;
    const int attempts = std::max(options_.retry.max_attempts, 1);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        HttpResult res;
        {
            ConcurrencyGate::Slot slot(gate_);
            limiter_.acquire();
            {
                std::lock_guard lock(mu_);
                ++stats_.dispatched;
            }
            res = transport_->post_json(endpoint_.base_url, key, body);
        }
        if (res.status == 200) return extract_reply_text(res.body);
        if (res.status == 401 || res.status == 403) {
            throw AuthError(fmt::format("{} rejected credentials (HTTP {})", endpoint_.base_url, res.status));
        }
        bool transient = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
        last_failure = res.status == 0 ? "no response: " + res.error : fmt::format("HTTP {}", res.status);
        if (!transient) {
            throw ProtocolError(fmt::format("{} returned {}", endpoint_.base_url, last_failure));
        }
        if (attempt == attempts) break;
        {
            std::lock_guard lock(mu_);
            ++stats_.retries;
        }
        auto ceiling = options_.retry.ceiling(attempt);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto delay = std::chrono::duration_cast<Clock::duration>(ceiling * unit(jitter_rng));
        spdlog::debug("{}: attempt {} failed ({}), backing off {} ms", endpoint_.base_url, attempt,
                      last_failure, std::chrono::duration_cast<std::chrono::milliseconds>(delay).count());
        clock_->sleep_for(delay);
    }
    throw TransportError(fmt::format("{}: giving up after {} attempts, last failure: {}", endpoint_.base_url,
                                     attempts, last_failure));
}

}  // namespace curator
