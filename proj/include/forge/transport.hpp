#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

#include "forge/error.hpp"

namespace forge::transport {

// http://host[:port][/base]
struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;  // no trailing slash

  static Endpoint parse(std::string_view url);
  std::string url() const;
};

struct RetryPolicy {
  int max_retries = 3;                                  // after the first attempt
  std::chrono::milliseconds base_delay{1000};           // doubles per retry: 1s, 2s, 4s
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for

  std::chrono::milliseconds delay_before_retry(int retry_index) const;  // 0-based
  static RetryPolicy none() { return RetryPolicy{0, std::chrono::milliseconds{0}, {}}; }
};

void default_sleep(std::chrono::milliseconds d);

// Calls fn until it returns or throws something other than a TransportError.
// TransportErrors are retried per policy; the last one is rethrown.
template <class Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  for (int retry = 0;; ++retry) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError || retry >= policy.max_retries) throw;
    }
    const auto d = policy.delay_before_retry(retry);
    if (policy.sleep) {
      policy.sleep(d);
    } else {
      default_sleep(d);
    }
  }
}

// POSTs a JSON body and returns the raw response body. Connection failures and
// non-2xx statuses throw TransportError.
std::string post_json(const Endpoint& endpoint, std::string_view path, const std::string& body,
                      std::chrono::seconds timeout = std::chrono::seconds{120});

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);  // throws InvalidArgument

}  // namespace forge::transport
