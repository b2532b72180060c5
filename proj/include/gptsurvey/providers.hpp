#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gptsurvey {

struct ProviderReply {
  bool ok = false;
  std::string text;       // raw completion when ok
  std::string error;      // diagnostic when !ok
  bool retryable = false; // transient (429/5xx/network) vs permanent
};

// Single-operation provider surface: prompt in, raw text out.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply complete(const std::string& prompt) = 0;
  virtual std::string model_id() const = 0;
};

// Rule-table mock. A rule fires when both substrings occur in the prompt
// (case-insensitive); the rendered prompt contains the headline and the
// series target text, so rules can key on either. First match wins.
struct MockRule {
  std::string target_contains;    // "" = any series
  std::string headline_contains;  // "" = any headline
  int direction = 0;              // 1, -1, 0
  std::string explanation;
};

namespace detail {
inline std::string lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}
}  // namespace detail

class MockProvider : public Provider {
 public:
  explicit MockProvider(std::vector<MockRule> rules,
                        std::string model = "mock-1")
      : rules_(std::move(rules)), model_(std::move(model)) {}

  ProviderReply complete(const std::string& prompt) override {
    const std::string low = detail::lower(prompt);
    for (const auto& r : rules_) {
      if (!r.target_contains.empty() &&
          low.find(detail::lower(r.target_contains)) == std::string::npos)
        continue;
      if (!r.headline_contains.empty() &&
          low.find(detail::lower(r.headline_contains)) == std::string::npos)
        continue;
      return {true, std::to_string(r.direction) + " | " + r.explanation, "",
              false};
    }
    return {true, "0 | No clear direction from this headline.", "", false};
  }

  std::string model_id() const override { return model_; }

 private:
  std::vector<MockRule> rules_;
  std::string model_;
};

inline std::vector<MockRule> load_mock_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock rules " + path);
  nlohmann::json j;
  in >> j;
  std::vector<MockRule> rules;
  for (const auto& r : j.at("rules")) {
    rules.push_back(MockRule{r.value("target_contains", std::string{}),
                             r.value("headline_contains", std::string{}),
                             r.at("direction").get<int>(),
                             r.value("explanation", std::string{})});
  }
  return rules;
}

}  // namespace gptsurvey
