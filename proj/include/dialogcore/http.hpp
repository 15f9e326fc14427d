#pragma once

#include <chrono>
#include <functional>
#include <string>

namespace dialogcore::http {

// "http://host:port/some/path" split into the origin httplib wants and a path.
struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // always begins with '/'

    static Url parse(const std::string& text);
    Url join(const std::string& suffix) const;
};

struct Response {
    int status = 0;  // 0 when the connection itself failed
    std::string body;
    std::string error;  // transport error description, empty on success
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{200};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{5000};
    std::chrono::seconds timeout{60};
};

// Connection failures, 408, 429 and 5xx are worth another attempt.
bool is_transient(const Response& response);

Response post_json(const Url& url, const std::string& body, std::chrono::seconds timeout);

// POSTs with exponential backoff between attempts. Returns the first non-transient
// response (which may still be an error status) or throws ServiceError once
// attempts are exhausted. `what` is used in error messages.
Response post_json_with_retries(const Url& url, const std::string& body, const RetryPolicy& policy,
                                const std::string& what);

}  // namespace dialogcore::http
