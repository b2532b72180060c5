#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gptsurvey/date.hpp"

namespace gptsurvey {

struct RunConfig {
  // Pipeline inputs
  std::string corpus_path;
  nlohmann::json filter_profile;  // forwarded to profile_from_json
  int sample_per_month = 300;
  std::uint64_t seed = 0;
  std::string catalog_path;  // empty = built-in catalog

  // Provider
  std::string provider = "mock";  // "mock" | "http"
  std::string model_id = "mock-1";
  std::string mock_rules_path;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string api_base_url = "https://api.openai.com";
  double min_call_interval_seconds = 0.0;
  int max_in_flight = 1;
  std::string cache_path;

  // Aggregation
  int min_count = 10;
  int window_months = 3;

  // Benchmarks (empty path = benchmark unavailable, table skipped)
  std::string aaii_path;
  std::string cfo_path;
  std::string spf_forecasts_path;
  std::string spf_realized_path;
  std::string predictors_path;

  // Analysis windows
  std::optional<Date> date_min;
  std::optional<Date> date_max;
  bool pre2019 = false;                  // cap every table at 2018-12-31
  Date oos_cutoff{2021, 9, 30};          // provider training cutoff

  // Inference
  int nw_lag_monthly = 12;
  int nw_lag_quarterly = 4;

  std::string output_dir = "out";

  Date effective_date_max() const {
    const Date cap{2018, 12, 31};
    if (!pre2019) return date_max.value_or(Date{9999, 12, 31});
    const Date dm = date_max.value_or(cap);
    return dm < cap ? dm : cap;
  }
};

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;

  RunConfig c;
  c.corpus_path = j.value("corpus", std::string{});
  if (j.contains("filter_profile")) c.filter_profile = j["filter_profile"];
  c.sample_per_month = j.value("sample_per_month", 300);
  c.seed = j.value("seed", std::uint64_t{0});
  c.catalog_path = j.value("catalog", std::string{});

  if (j.contains("provider")) {
    const auto& p = j["provider"];
    c.provider = p.value("kind", std::string{"mock"});
    c.model_id = p.value("model", c.provider == "mock" ? "mock-1"
                                                       : "gpt-3.5-turbo");
    c.mock_rules_path = p.value("mock_rules", std::string{});
    c.api_key_env = p.value("api_key_env", std::string{"OPENAI_API_KEY"});
    c.api_base_url = p.value("base_url", std::string{"https://api.openai.com"});
    c.min_call_interval_seconds = p.value("min_call_interval_seconds", 0.0);
    c.max_in_flight = p.value("max_in_flight", 1);
  }
  c.cache_path = j.value("cache", std::string{});

  if (j.contains("aggregation")) {
    c.min_count = j["aggregation"].value("min_count", 10);
    c.window_months = j["aggregation"].value("window_months", 3);
  }

  if (j.contains("benchmarks")) {
    const auto& b = j["benchmarks"];
    c.aaii_path = b.value("aaii", std::string{});
    c.cfo_path = b.value("cfo", std::string{});
    c.spf_forecasts_path = b.value("spf_forecasts", std::string{});
    c.spf_realized_path = b.value("spf_realized", std::string{});
    c.predictors_path = b.value("predictors", std::string{});
  }

  if (j.contains("dates")) {
    const auto& d = j["dates"];
    if (d.contains("min"))
      c.date_min = parse_date_or_throw(d["min"].get<std::string>());
    if (d.contains("max"))
      c.date_max = parse_date_or_throw(d["max"].get<std::string>());
    if (d.contains("oos_cutoff"))
      c.oos_cutoff = parse_date_or_throw(d["oos_cutoff"].get<std::string>());
    if (c.date_min && c.date_max && *c.date_max < *c.date_min)
      throw std::runtime_error("config: date range ill-ordered");
  }

  if (j.contains("inference")) {
    c.nw_lag_monthly = j["inference"].value("nw_lag_monthly", 12);
    c.nw_lag_quarterly = j["inference"].value("nw_lag_quarterly", 4);
  }

  c.output_dir = j.value("output_dir", std::string{"out"});

  for (const std::string* p :
       {&c.corpus_path, &c.mock_rules_path, &c.aaii_path, &c.cfo_path,
        &c.spf_forecasts_path, &c.spf_realized_path, &c.predictors_path,
        &c.catalog_path})
    if (!p->empty() && !std::filesystem::exists(*p))
      throw std::runtime_error("config: referenced path does not exist: " + *p);
  return c;
}

}  // namespace gptsurvey
