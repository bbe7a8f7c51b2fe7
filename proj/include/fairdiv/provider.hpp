#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "fairdiv/parse.hpp"
#include "fairdiv/prompts.hpp"

namespace fairdiv {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RetryPolicy {
  int max_attempts = 4;
  int initial_backoff_ms = 500;
  double multiplier = 2.0;
  int max_backoff_ms = 30000;
};

struct ProviderConfig {
  std::string endpoint = "stub";  // "stub" or an http(s) URL of a chat-completion endpoint
  std::string style = "openai";   // "openai" | "anthropic"
  std::string model = "stub";
  double temperature = 1.0;
  int samples = 100;
  int concurrency = 4;
  int max_tokens = 2048;
  int timeout_seconds = 120;
  RetryPolicy retry;
  std::string env_key_name;
  std::vector<std::string> script;  // stub answers

  void validate() const {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (samples < 1) throw ConfigError("samples must be >= 1");
    if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
    if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
    if (style != "openai" && style != "anthropic") throw ConfigError("unknown provider style '" + style + "'");
    if (is_stub() && script.empty()) throw ConfigError("stub provider needs a non-empty script");
  }

  bool is_stub() const { return endpoint == "stub"; }
};

struct RequestInfo {
  int sample = 0;
  int round = 0;  // refinement round, 0-based
  int stage = 1;  // 1 = answer, 2 = extraction
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const Messages& messages, const RequestInfo& info) = 0;
  virtual std::string name() const = 0;
};

// Stage 1 cycles through the script; stage 2 echoes the first JSON object in the
// quoted latest response (feedback prompts quote earlier answers before it).
class ScriptedProvider : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<std::string> script, std::string name = "stub")
      : script_(std::move(script)), name_(std::move(name)) {
    if (script_.empty()) throw ConfigError("stub provider needs a non-empty script");
  }

  std::string complete(const Messages& messages, const RequestInfo& info) override {
    if (info.stage == 2) {
      std::string_view prompt = messages.back().content;
      size_t at = prompt.rfind("And this was your response");
      if (auto j = extract_json_object(at == std::string_view::npos ? prompt : prompt.substr(at))) return j->dump();
      return "I could not identify an allocation in the response.";
    }
    return script_[static_cast<size_t>(info.sample + info.round) % script_.size()];
  }

  std::string name() const override { return name_; }

 private:
  std::vector<std::string> script_;
  std::string name_;
};

struct ParsedUrl {
  std::string scheme_host_port;
  std::string host;
  std::string path;
  bool https = false;
};

inline ParsedUrl parse_url(const std::string& url) {
  ParsedUrl u;
  auto sep = url.find("://");
  if (sep == std::string::npos) throw ConfigError("endpoint must be 'stub' or an http(s) URL: " + url);
  std::string scheme = url.substr(0, sep);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported scheme '" + scheme + "'");
  u.https = scheme == "https";
  auto slash = url.find('/', sep + 3);
  std::string authority = url.substr(sep + 3, slash == std::string::npos ? std::string::npos : slash - sep - 3);
  u.scheme_host_port = scheme + "://" + authority;
  u.host = authority.substr(0, authority.find(':'));
  u.path = slash == std::string::npos ? "/" : url.substr(slash);
  return u;
}

inline bool is_local_endpoint(const std::string& endpoint) {
  if (endpoint == "stub") return true;
  auto u = parse_url(endpoint);
  return u.host == "localhost" || u.host == "127.0.0.1" || u.host == "::1" || u.host == "[::1]";
}

class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)), url_(parse_url(cfg_.endpoint)) {
    if (!cfg_.env_key_name.empty()) {
      const char* key = std::getenv(cfg_.env_key_name.c_str());
      if (!key || !*key) throw ConfigError("environment variable " + cfg_.env_key_name + " is not set");
      key_ = key;
    }
  }

  std::string complete(const Messages& messages, const RequestInfo&) override {
    json body = request_body(messages);
    httplib::Headers headers;
    if (cfg_.style == "anthropic") {
      if (!key_.empty()) headers.emplace("x-api-key", key_);
      headers.emplace("anthropic-version", "2023-06-01");
    } else if (!key_.empty()) {
      headers.emplace("Authorization", "Bearer " + key_);
    }
    std::string last_error;
    int backoff = cfg_.retry.initial_backoff_ms;
    for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
      httplib::Client client(url_.scheme_host_port);
      client.set_connection_timeout(cfg_.timeout_seconds);
      client.set_read_timeout(cfg_.timeout_seconds);
      auto res = client.Post(url_.path, headers, body.dump(), "application/json");
      if (res && res->status == 200) {
        auto j = json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw TransportError("provider returned non-JSON body");
        return response_text(j);
      }
      bool retryable = !res || res->status == 408 || res->status == 429 || res->status >= 500;
      last_error = res ? "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200)
                       : "transport error: " + httplib::to_string(res.error());
      if (!retryable) break;
      if (attempt < cfg_.retry.max_attempts) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff = std::min(cfg_.retry.max_backoff_ms, static_cast<int>(backoff * cfg_.retry.multiplier));
      }
    }
    throw TransportError(last_error);
  }

  std::string name() const override { return cfg_.model; }

 private:
  json request_body(const Messages& messages) const {
    json msgs = json::array();
    std::string system;
    for (const auto& m : messages) {
      if (cfg_.style == "anthropic" && m.role == "system") {
        system += m.content;
        continue;
      }
      msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    json body = {{"model", cfg_.model}, {"messages", msgs}, {"temperature", cfg_.temperature}};
    if (cfg_.style == "anthropic") {
      body["max_tokens"] = cfg_.max_tokens;
      if (!system.empty()) body["system"] = system;
    }
    return body;
  }

  std::string response_text(const json& j) const {
    try {
      if (cfg_.style == "anthropic") {
        std::string out;
        for (const auto& part : j.at("content"))
          if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
        return out;
      }
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("unexpected response shape: ") + e.what());
    }
  }

  ProviderConfig cfg_;
  ParsedUrl url_;
  std::string key_;
};

inline std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& cfg) {
  cfg.validate();
  if (cfg.is_stub()) return std::make_unique<ScriptedProvider>(cfg.script, cfg.model);
  return std::make_unique<HttpChatProvider>(cfg);
}

}  // namespace fairdiv
