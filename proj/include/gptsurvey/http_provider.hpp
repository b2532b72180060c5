#pragma once

// Chat-completion HTTP adapter. Credentials come from an environment
// variable only; nothing secret is ever written to disk.

#include <cstdlib>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "gptsurvey/providers.hpp"

namespace gptsurvey {

struct HttpProviderConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int timeout_seconds = 60;
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key)
      throw std::runtime_error("environment variable " + cfg_.api_key_env +
                               " not set");
    api_key_ = key;
  }

  ProviderReply complete(const std::string& prompt) override {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_seconds);
    client.set_read_timeout(cfg_.timeout_seconds);
    client.set_bearer_token_auth(api_key_);

    nlohmann::json body{
        {"model", cfg_.model},
        {"temperature", cfg_.temperature},
        {"messages",
         nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};

    auto res = client.Post(cfg_.path, body.dump(), "application/json");
    if (!res)
      return {false, "", "transport error: " + httplib::to_string(res.error()),
              true};
    if (res->status == 429 || res->status >= 500)
      return {false, "",
              "HTTP " + std::to_string(res->status) + ": " + res->body, true};
    if (res->status != 200)
      return {false, "",
              "HTTP " + std::to_string(res->status) + ": " + res->body, false};
    try {
      auto j = nlohmann::json::parse(res->body);
      return {true,
              j.at("choices").at(0).at("message").at("content")
                  .get<std::string>(),
              "", false};
    } catch (const nlohmann::json::exception& e) {
      return {false, "", std::string("bad response body: ") + e.what(), false};
    }
  }

  std::string model_id() const override { return cfg_.model; }

 private:
  HttpProviderConfig cfg_;
  std::string api_key_;
};

}  // namespace gptsurvey
