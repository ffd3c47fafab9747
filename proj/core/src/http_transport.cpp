#include <httplib.h>

#include "curator/errors.hpp"
#include "curator/gateway.hpp"

namespace curator {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("not a URL: " + url);
    auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

class HttplibTransport final : public Transport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

    HttpResult post_json(const std::string& url, const std::string& bearer, const std::string& body) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        httplib::Headers headers;
        if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }

private:
    std::chrono::milliseconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(std::chrono::milliseconds timeout) {
    return std::make_shared<HttplibTransport>(timeout);
}

}  // namespace curator
