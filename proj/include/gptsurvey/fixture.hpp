#pragma once

// Synthetic demo dataset: a dated corpus whose headlines encode a latent
// AR(1) sentiment state, mock-provider rules that decode it, and benchmark
// files (AAII, CFO, SPF, predictors) correlated with the same state. Lets
// the whole pipeline run end to end without licensed data.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gptsurvey/corpus.hpp"
#include "gptsurvey/csv.hpp"
#include "gptsurvey/date.hpp"

namespace gptsurvey::fixture {

struct FixtureOptions {
  std::string dir;
  Date start{2012, 1, 1};
  int months = 120;
  int articles_per_month = 300;
  std::uint64_t seed = 42;
  double rho = 0.9;    // latent AR(1) persistence
  double sigma = 0.6;  // latent innovation sd
  int oos_after_months = 96;  // provider "training cutoff" within the sample
};

struct FixtureResult {
  std::vector<double> latent;  // one state per month
  std::string corpus_path, mock_rules_path, aaii_path, cfo_path,
      spf_forecasts_path, spf_realized_path, predictors_path, config_path,
      latent_path;
  Date oos_cutoff;
};

namespace detail {

// Box-Muller on raw uniforms; avoids std::normal_distribution, whose
// algorithm is implementation-defined.
class Gauss {
 public:
  explicit Gauss(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 1e-12);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

  double uniform() {
    return (rng_() >> 11) * (1.0 / 9007199254740992.0);  // [0,1) at 53 bits
  }

 private:
  std::mt19937_64 rng_;
  bool have_ = false;
  double spare_ = 0.0;
};

inline std::vector<Date> weekdays_of(int mkey) {
  std::vector<Date> out;
  const Date first = month_start(mkey), last = month_end(mkey);
  for (std::int64_t z = to_days(first); z <= to_days(last); ++z) {
    const Date d = from_days(z);
    if (!is_weekend(d)) out.push_back(d);
  }
  return out;
}

inline const std::vector<std::string>& spf_columns() {
  static const std::vector<std::string> cols = {
      "CPI",     "HOUSING", "INDPROD", "PGDP",    "BOND",  "RCONSUM",
      "RFEDGOV", "RGDP",    "RNRESIN", "RRESINV", "RSLGOV", "TBILL",
      "UNEMP"};
  return cols;
}

}  // namespace detail

inline FixtureResult write_fixture(const FixtureOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.dir);
  auto at = [&](const std::string& name) {
    return (fs::path(opt.dir) / name).string();
  };

  FixtureResult res;
  detail::Gauss g(opt.seed);
  const int mk0 = month_key(opt.start);
  const int extra_months = 15;  // covers SPF targets past the sample end

  // Latent monthly state.
  std::vector<double> s(opt.months + extra_months);
  s[0] = g();
  for (std::size_t m = 1; m < s.size(); ++m)
    s[m] = opt.rho * s[m - 1] + opt.sigma * g();
  res.latent.assign(s.begin(), s.begin() + opt.months);

  // ---- corpus + latent dump
  res.corpus_path = at("corpus.jsonl");
  {
    std::ofstream out(res.corpus_path, std::ios::binary);
    const std::string body =
        "Reporters describe the economic situation in measured detail today. "
        "Observers track production trade inflation housing and employment "
        "figures closely. ";
    std::string full_body;
    for (int i = 0; i < 6; ++i) full_body += body;  // > 100 words
    for (int m = 0; m < opt.months; ++m) {
      const auto days = detail::weekdays_of(mk0 + m);
      const double p_inc = 0.5 * (1.0 + std::tanh(s[m]));
      for (int i = 0; i < opt.articles_per_month; ++i) {
        const Date d = days[i % days.size()];
        const double u = g.uniform();
        std::string headline;
        if (u < 0.1)
          headline =
              "Analysts remain divided about where major markets will head "
              "next quarter overall";
        else if (u < 0.1 + 0.9 * p_inc)
          headline =
              "Economic outlook brightens as broad optimism spreads across "
              "major markets nationwide";
        else
          headline =
              "Economic outlook darkens as deep pessimism spreads across "
              "major markets nationwide";
        char id[24];
        std::snprintf(id, sizeof(id), "a%04d_%04d", m, i);
        nlohmann::json j{{"id", id},
                         {"date", to_string(d)},
                         {"headline", headline},
                         {"body", full_body},
                         {"section", "A"},
                         {"section_name", "ECONOMY"},
                         {"tags", nlohmann::json::array()}};
        out << j.dump() << '\n';
      }
    }
  }
  res.latent_path = at("latent.csv");
  {
    csv::Table t;
    t.header = {"date", "state"};
    for (int m = 0; m < opt.months; ++m) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.10g", s[m]);
      t.rows.push_back({to_string(month_start(mk0 + m)), buf});
    }
    csv::write_file(res.latent_path, t);
  }

  // ---- mock rules
  res.mock_rules_path = at("mock_rules.json");
  {
    nlohmann::json j;
    j["rules"] = nlohmann::json::array(
        {{{"headline_contains", "optimism"},
          {"direction", 1},
          {"explanation", "Positive sentiment points to improvement."}},
         {{"headline_contains", "pessimism"},
          {"direction", -1},
          {"explanation", "Negative sentiment points to deterioration."}}});
    std::ofstream out(res.mock_rules_path, std::ios::binary);
    out << j.dump(2) << '\n';
  }

  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };

  // ---- AAII weekly
  res.aaii_path = at("aaii.csv");
  {
    csv::Table t;
    t.header = {"date", "bullish", "bearish", "neutral"};
    std::int64_t z = to_days(month_start(mk0));
    while (weekday(from_days(z)) != 3) ++z;  // first Thursday
    const std::int64_t zmax = to_days(month_end(mk0 + opt.months - 1));
    for (; z <= zmax; z += 7) {
      const Date d = from_days(z);
      const int m = month_key(d) - mk0;
      const double x = std::tanh(s[m]) + 0.15 * g();
      t.rows.push_back({to_string(d), num(40.0 + 15.0 * x),
                        num(40.0 - 15.0 * x), num(20.0)});
    }
    csv::write_file(res.aaii_path, t);
  }

  // ---- CFO quarterly
  res.cfo_path = at("cfo.csv");
  {
    csv::Table t;
    t.header = {"date", "expected_return"};
    const int q0 = quarter_key(opt.start);
    const int qn = quarter_key(month_start(mk0 + opt.months - 1));
    for (int q = q0; q <= qn; ++q) {
      double sbar = 0;
      for (int k = 0; k < 3; ++k)
        sbar += s[(quarter_start(q).year * 12 + (quarter_start(q).month - 1)) -
                  mk0 + k] / 3.0;
      const Date d = from_days(to_days(quarter_start(q)) + 45);
      t.rows.push_back({to_string(d), num(6.0 + 2.0 * std::tanh(sbar) +
                                          0.2 * g())});
    }
    csv::write_file(res.cfo_path, t);
  }

  // ---- SPF forecasts + realized
  const int q0 = quarter_key(opt.start);
  const int qn = quarter_key(month_start(mk0 + opt.months - 1));
  auto quarter_state = [&](int q) {
    const int mq = month_key(quarter_start(q)) - mk0;
    double sbar = 0;
    for (int k = 0; k < 3; ++k) sbar += s[mq + k] / 3.0;
    return sbar;
  };
  // Per-series quarterly truth, targets running 4 quarters past the sample.
  std::map<std::string, std::map<int, double>> truth;
  {
    detail::Gauss gs(opt.seed ^ 0x5157u);
    int idx = 0;
    for (const auto& col : detail::spf_columns()) {
      const double base = 1.0 + 0.5 * idx;
      const double scale = (idx % 2 ? -1.0 : 1.0) * (1.0 + 0.1 * idx);
      for (int q = q0; q <= qn + 4; ++q)
        truth[col][q] = base + scale * std::tanh(quarter_state(q)) + 0.3 * gs();
      ++idx;
    }
  }
  res.spf_forecasts_path = at("spf_forecasts.csv");
  {
    csv::Table t;
    t.header = {"series", "date", "horizon", "forecast"};
    detail::Gauss gf(opt.seed ^ 0xF0F0u);
    for (const auto& col : detail::spf_columns())
      for (int q = q0 + 1; q <= qn; ++q)
        for (int h = 1; h <= 4; ++h) {
          const double f = 0.6 * truth[col][q + h] +
                           0.4 * std::tanh(quarter_state(q)) + 0.1 * gf();
          t.rows.push_back({col, to_string(quarter_start(q)),
                            std::to_string(h), num(f)});
        }
    csv::write_file(res.spf_forecasts_path, t);
  }
  res.spf_realized_path = at("spf_realized.csv");
  {
    csv::Table t;
    t.header = {"series", "date", "value", "vintage"};
    for (const auto& col : detail::spf_columns())
      for (int q = q0; q <= qn + 4; ++q)
        t.rows.push_back({col, to_string(quarter_start(q)),
                          num(truth[col][q]), "first_release"});
    csv::write_file(res.spf_realized_path, t);
  }

  // ---- monthly predictors
  res.predictors_path = at("predictors.csv");
  {
    csv::Table t;
    t.header = {"date",  "market_return", "log_dp",       "cay",
                "tbill", "default_spread", "term_spread", "fund_flow"};
    detail::Gauss gp(opt.seed ^ 0xABCDu);
    double log_dp = -3.5, cay = 0.0, tb = 2.0, ds = 1.0, ts = 1.5;
    for (int m = 0; m < opt.months; ++m) {
      log_dp = -3.5 + 0.98 * (log_dp + 3.5) + 0.05 * gp();
      cay = 0.95 * cay + 0.01 * gp();
      tb = 2.0 + 0.95 * (tb - 2.0) + 0.1 * gp();
      ds = 1.0 + 0.9 * (ds - 1.0) + 0.05 * gp();
      ts = 1.5 + 0.9 * (ts - 1.5) + 0.08 * gp();
      const double r = 0.01 * std::tanh(m > 0 ? s[m - 1] : 0.0) +
                       0.02 * (log_dp + 3.5) + 0.04 * gp();
      const double flow = 0.5 * std::tanh(s[m]) + 0.2 * gp();
      t.rows.push_back({to_string(month_start(mk0 + m)), num(r), num(log_dp),
                        num(cay), num(tb), num(ds), num(ts), num(flow)});
    }
    csv::write_file(res.predictors_path, t);
  }

  // ---- run config
  res.oos_cutoff = month_end(mk0 + opt.oos_after_months - 1);
  res.config_path = at("config.json");
  {
    nlohmann::json j;
    j["corpus"] = res.corpus_path;
    j["sample_per_month"] = opt.articles_per_month;
    j["seed"] = 7;
    j["provider"] = {{"kind", "mock"},
                     {"model", "mock-1"},
                     {"mock_rules", res.mock_rules_path}};
    j["cache"] = at("cache.jsonl");
    j["aggregation"] = {{"min_count", 10}, {"window_months", 1}};
    j["benchmarks"] = {{"aaii", res.aaii_path},
                       {"cfo", res.cfo_path},
                       {"spf_forecasts", res.spf_forecasts_path},
                       {"spf_realized", res.spf_realized_path},
                       {"predictors", res.predictors_path}};
    j["dates"] = {{"oos_cutoff", to_string(res.oos_cutoff)}};
    j["output_dir"] = at("out");
    std::ofstream out(res.config_path, std::ios::binary);
    out << j.dump(2) << '\n';
  }
  return res;
}

}  // namespace gptsurvey::fixture
