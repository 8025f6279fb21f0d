// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The taskrisk Authors

#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "taskrisk/augment.hpp"

namespace taskrisk {

inline constexpr const char* kProviderUrlEnv = "TASKRISK_PROVIDER_URL";
inline constexpr const char* kProviderTokenEnv = "TASKRISK_PROVIDER_TOKEN";

// JSON-over-HTTP paraphrase backend:
//   POST {"text": ..., "n": ..., "temperature": ...}
//   200  {"variants": ["...", ...]}
// Transport failures and non-2xx statuses are retried; 401/403 are not.
class HttpProvider : public ProviderClient {
 public:
  HttpProvider(std::string url, std::string token, double timeout_seconds = 30.0, int retries = 2)
      : token_(std::move(token)), timeout_(timeout_seconds), retries_(retries) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(ErrorCode::ProviderUnavailable, "provider URL needs a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    base_ = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
  }

  // Reads the endpoint and token from the environment.
  static HttpProvider from_env(double timeout_seconds = 30.0, int retries = 2) {
    const char* url = std::getenv(kProviderUrlEnv);
    if (!url || !*url)
      throw Error(ErrorCode::ProviderUnavailable, std::string(kProviderUrlEnv) + " is not set");
    const char* token = std::getenv(kProviderTokenEnv);
    return HttpProvider(url, token ? token : "", timeout_seconds, retries);
  }

  std::vector<std::string> complete(const ParaphraseRequest& req) override {
    req.validate();
    const nlohmann::json body = {{"text", req.source_text}, {"n", req.n_variants}, {"temperature", req.temperature}};
    httplib::Client client(base_);
    const auto secs = static_cast<time_t>(timeout_);
    const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      auto res = client.Post(path_, headers, body.dump(), "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403)
        throw Error(ErrorCode::ProviderUnavailable, "provider rejected credentials (HTTP " +
                                                        std::to_string(res->status) + ")");
      if (res->status < 200 || res->status >= 300) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      return parse_variants(res->body);
    }
    throw Error(ErrorCode::ProviderUnavailable,
                "no response from " + base_ + path_ + " after " + std::to_string(retries_ + 1) +
                    " attempt(s): " + last_error);
  }

  static std::vector<std::string> parse_variants(const std::string& payload) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::MalformedResponse, "response is not JSON");
    }
    if (!j.is_object() || !j.contains("variants") || !j["variants"].is_array())
      throw Error(ErrorCode::MalformedResponse, "response has no \"variants\" array");
    std::vector<std::string> out;
    for (const auto& v : j["variants"]) {
      if (!v.is_string()) throw Error(ErrorCode::MalformedResponse, "variant is not a string");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

 private:
  std::string base_;
  std::string path_;
  std::string token_;
  double timeout_;
  int retries_;
};

}  // namespace taskrisk
