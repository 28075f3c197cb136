#include "forge/transport.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <thread>

#include "httplib.h"

namespace forge::transport {

Endpoint Endpoint::parse(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    throw Error(ErrorCode::ConfigError, "endpoint must start with http://: '" + std::string(url) + "'");
  }
  url.remove_prefix(scheme.size());
  Endpoint ep;
  const auto slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(url.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    const auto port = authority.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), ep.port);
    if (ec != std::errc{} || ptr != port.data() + port.size() || ep.port <= 0 || ep.port > 65535) {
      throw Error(ErrorCode::ConfigError, "bad port in endpoint '" + std::string(url) + "'");
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw Error(ErrorCode::ConfigError, "endpoint has no host");
  ep.host = std::string(authority);
  return ep;
}

std::string Endpoint::url() const { return "http://" + host + ":" + std::to_string(port) + base_path; }

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry_index) const {
  return base_delay * (1LL << std::min(retry_index, 20));
}

void default_sleep(std::chrono::milliseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

std::string post_json(const Endpoint& endpoint, std::string_view path, const std::string& body,
                      std::chrono::seconds timeout) {
  httplib::Client cli(endpoint.host, endpoint.port);
  cli.set_connection_timeout(std::chrono::seconds{10});
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  const std::string full = endpoint.base_path + std::string(path);
  auto res = cli.Post(full, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::TransportError,
                "POST " + endpoint.url() + std::string(path) + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::TransportError,
                "POST " + endpoint.url() + std::string(path) + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::InvalidArgument, "base64 length is not a multiple of 4");
  if (text.empty()) return {};
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "invalid base64");
  // EVP_DecodeBlock keeps the bytes produced by '=' padding
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace forge::transport
