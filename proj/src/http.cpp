#include "dialogcore/http.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "dialogcore/error.hpp"

namespace dialogcore::http {

Url Url::parse(const std::string& text) {
    const auto scheme_end = text.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint URL must include a scheme: '" + text + "'");
    const auto scheme = text.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw ValidationError("unsupported URL scheme '" + scheme + "' in '" + text + "'");
    const auto path_start = text.find('/', scheme_end + 3);
    Url url;
    url.origin = text.substr(0, path_start);
    url.path = path_start == std::string::npos ? "/" : text.substr(path_start);
    if (url.origin.size() <= scheme_end + 3) throw ValidationError("endpoint URL has no host: '" + text + "'");
    return url;
}

Url Url::join(const std::string& suffix) const {
    Url out = *this;
    std::string base = path;
    while (!base.empty() && base.back() == '/') base.pop_back();
    out.path = base + (suffix.empty() || suffix.front() == '/' ? "" : "/") + suffix;
    return out;
}

bool is_transient(const Response& response) {
    return response.status == 0 || response.status == 408 || response.status == 429 || response.status >= 500;
}

Response post_json(const Url& url, const std::string& body, std::chrono::seconds timeout) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    Response out;
    auto result = client.Post(url.path, body, "application/json");
    if (!result) {
        out.error = httplib::to_string(result.error());
        return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
}

Response post_json_with_retries(const Url& url, const std::string& body, const RetryPolicy& policy,
                                const std::string& what) {
    auto delay = policy.base_delay;
    Response last;
    const int attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        last = post_json(url, body, policy.timeout);
        if (!is_transient(last)) return last;
        if (attempt < attempts) {
            std::this_thread::sleep_for(delay);
            const auto next = std::chrono::duration<double, std::milli>(delay) * policy.multiplier;
            delay = std::min(policy.max_delay, std::chrono::duration_cast<std::chrono::milliseconds>(next));
        }
    }
    const auto detail = last.status == 0 ? "connection error: " + last.error : "HTTP status " + std::to_string(last.status);
    throw ServiceError(what + " failed after " + std::to_string(attempts) + " attempts (" + detail + ")");
}

}  // namespace dialogcore::http
