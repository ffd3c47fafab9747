#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include <curator/corpus.hpp>
#include <curator/gateway.hpp>

namespace curator::testing {

inline std::filesystem::path fixture(const std::string& relative) {
    return std::filesystem::path(CURATOR_FIXTURE_DIR) / relative;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("curator-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string chat_reply_body(const std::string& text) {
    nlohmann::json body;
    body["choices"] = nlohmann::json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}});
    return body.dump();
}

/// Local chat-completion server. The handler receives the request body and
/// the 1-based request number and returns (status, body). Records arrival
/// times and the peak number of requests in flight.
class StubServer {
public:
    using Handler = std::function<std::pair<int, std::string>(const std::string& body, std::size_t n)>;

    explicit StubServer(Handler handler, std::chrono::milliseconds service_time = std::chrono::milliseconds(0))
        : handler_(std::move(handler)), service_time_(service_time) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            std::size_t n;
            {
                std::lock_guard lock(mu_);
                arrivals_.push_back(std::chrono::steady_clock::now());
                n = arrivals_.size();
                authorization_ = req.get_header_value("Authorization");
                bodies_.push_back(req.body);
            }
            int now = ++in_flight_;
            int seen = peak_.load();
            while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
            }
            if (service_time_.count() > 0) std::this_thread::sleep_for(service_time_);
            auto [status, body] = handler_(req.body, n);
            --in_flight_;
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    std::size_t requests() const {
        std::lock_guard lock(mu_);
        return arrivals_.size();
    }
    std::vector<std::chrono::steady_clock::time_point> arrivals() const {
        std::lock_guard lock(mu_);
        return arrivals_;
    }
    std::vector<std::string> bodies() const {
        std::lock_guard lock(mu_);
        return bodies_;
    }
    std::string last_authorization() const {
        std::lock_guard lock(mu_);
        return authorization_;
    }
    int peak_in_flight() const { return peak_.load(); }

private:
    Handler handler_;
    std::chrono::milliseconds service_time_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::vector<std::chrono::steady_clock::time_point> arrivals_;
    std::vector<std::string> bodies_;
    std::string authorization_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
};

/// Time only moves when someone sleeps. Single-threaded use.
class VirtualClock final : public Clock {
public:
    time_point now() override {
        std::lock_guard lock(mu_);
        return now_;
    }
    void sleep_until(time_point t) override {
        std::lock_guard lock(mu_);
        if (t > now_) now_ = t;
    }

private:
    std::mutex mu_;
    time_point now_{};
};

/// Scripted transport: records each call at the current virtual time.
class ScriptedTransport final : public Transport {
public:
    ScriptedTransport(std::shared_ptr<Clock> clock, std::function<HttpResult(std::size_t)> script)
        : clock_(std::move(clock)), script_(std::move(script)) {}

    HttpResult post_json(const std::string&, const std::string& bearer, const std::string& body) override {
        std::lock_guard lock(mu_);
        stamps.push_back(clock_->now());
        bearers.push_back(bearer);
        bodies.push_back(body);
        return script_(stamps.size());
    }

    std::vector<Clock::time_point> stamps;
    std::vector<std::string> bearers;
    std::vector<std::string> bodies;

private:
    std::shared_ptr<Clock> clock_;
    std::function<HttpResult(std::size_t)> script_;
    std::mutex mu_;
};

inline HttpResult ok(const std::string& text) { return {200, chat_reply_body(text), {}}; }

/// Largest number of timestamps falling inside any half-open window
/// [t, t + window) that starts at one of the timestamps.
template <typename TimePoint, typename Duration>
std::size_t max_in_window(std::vector<TimePoint> stamps, Duration window) {
    std::sort(stamps.begin(), stamps.end());
    std::size_t best = 0;
    for (std::size_t i = 0, j = 0; i < stamps.size(); ++i) {
        if (j < i) j = i;
        while (j < stamps.size() && stamps[j] < stamps[i] + window) ++j;
        best = std::max(best, j - i);
    }
    return best;
}

/// Random sample text: ASCII, unicode, quotes, and embedded newlines.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::string> pieces{"a",  "Z",    " ",   "\n",  "\t",   "\"",  "\\",
                                                 "{",  "}",    "é",   "ß",   "中文", "🙂",  "0",
                                                 "#", "\x01", "ok ", "Java", "c++",  "<nooutput>"};
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::string out;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) out += pieces[pick(rng)];
    return out;
}

}  // namespace curator::testing
