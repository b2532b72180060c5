#pragma once

// Run orchestration: wires corpus -> elicitation -> aggregation -> benchmark
// validation and emits every report table (plus plots) into the output
// directory. Data files are written with fixed formatting so identical
// inputs produce byte-identical artifacts; the manifest carries timestamps
// and is exempt from that guarantee.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "gptsurvey/aggregation.hpp"
#include "gptsurvey/config.hpp"
#include "gptsurvey/corpus.hpp"
#include "gptsurvey/csv.hpp"
#include "gptsurvey/econometrics.hpp"
#include "gptsurvey/elicitation.hpp"
#include "gptsurvey/http_provider.hpp"
#include "gptsurvey/providers.hpp"
#include "gptsurvey/surveys.hpp"
#include "gptsurvey/svg.hpp"

#define GPTSURVEY_VERSION "1.0.0"

namespace gptsurvey {

struct ReportArtifact {
  std::string kind;       // "table" | "figure"
  std::string anchor;     // "Tab1", "Fig2", ...
  std::string data_path;
  std::string plot_path;  // optional
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string fmt(std::optional<double> v) {
  return v ? fmt(*v) : std::string{};
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

// FNV-1a over a string; stable across platforms for manifest hashing.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pipeline stages

inline std::unique_ptr<Provider> make_provider(const RunConfig& c) {
  if (c.provider == "mock") {
    std::vector<MockRule> rules;
    if (!c.mock_rules_path.empty()) rules = load_mock_rules(c.mock_rules_path);
    return std::make_unique<MockProvider>(std::move(rules), c.model_id);
  }
  if (c.provider == "http") {
    HttpProviderConfig hc;
    hc.base_url = c.api_base_url;
    hc.model = c.model_id;
    hc.api_key_env = c.api_key_env;
    return std::make_unique<HttpProvider>(std::move(hc));
  }
  throw std::runtime_error("unknown provider kind: " + c.provider);
}

inline std::vector<SeriesSpec> catalog_for(const RunConfig& c) {
  return c.catalog_path.empty() ? default_catalog()
                                : load_catalog(c.catalog_path);
}

struct FilterStage {
  std::vector<Article> articles;
  FilterReport report;
};

inline FilterStage run_filter(const RunConfig& c) {
  if (c.corpus_path.empty())
    throw std::runtime_error("config: corpus path not set");
  auto load = load_corpus_jsonl_file(c.corpus_path);
  const FilterProfile profile =
      c.filter_profile.is_null() ? main_profile()
                                 : profile_from_json(c.filter_profile);
  auto [articles, report] =
      apply_filters(load.articles, profile,
                    static_cast<int>(load.errors.size()));
  return {std::move(articles), std::move(report)};
}

struct ElicitStage {
  std::vector<Article> articles;  // the elicited sample
  std::map<std::string, std::vector<DirectionalResponse>> responses;
  QueryStats stats;  // summed over series
};

inline ElicitStage run_elicit(const RunConfig& c,
                              const std::vector<Article>& sample,
                              Provider& provider, ResponseCache& cache) {
  const PromptTemplate tmpl = default_template();
  QueryOptions opts;
  opts.min_call_interval_seconds = c.min_call_interval_seconds;
  opts.max_in_flight = c.max_in_flight;
  opts.jitter_seed = c.seed;

  ElicitStage out;
  out.articles = sample;
  for (const auto& spec : catalog_for(c)) {
    auto [responses, stats] = query_series(sample, spec, provider, cache, tmpl,
                                           opts);
    out.stats.provider_calls += stats.provider_calls;
    out.stats.cache_hits += stats.cache_hits;
    out.stats.missing += stats.missing;
    if (!stats.complete) {
      out.stats.complete = false;
      out.stats.stop_reason = stats.stop_reason;
      throw std::runtime_error(
          "elicitation stopped (" + stats.stop_reason +
          "); answered responses are cached, rerun to resume");
    }
    out.responses[spec.id] = std::move(responses);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation report

class ReportWriter {
 public:
  ReportWriter(const RunConfig& config, std::string config_fingerprint = "")
      : c_(config), fingerprint_(std::move(config_fingerprint)) {
    std::filesystem::create_directories(c_.output_dir);
  }

  // Full battery. `elicited` carries one response vector per series id.
  std::vector<ReportArtifact> validate(const ElicitStage& elicited) {
    prepare(elicited);
    table1(elicited);
    filter_table();
    series_tables();
    fig2();
    fig3_fig4();
    fig5_fig6_tab4();
    tab3(elicited);
    appendix_b(elicited);
    manifest();
    return artifacts_;
  }

  void set_filter_report(const FilterReport& r) { filter_report_ = r; }

  const std::vector<std::string>& gaps() const { return gaps_; }
  const std::map<std::string, ExpectationSeries>& monthly() const {
    return monthly3_;
  }

 private:
  std::string path(const std::string& name) const {
    return (std::filesystem::path(c_.output_dir) / name).string();
  }

  void emit(const std::string& anchor, const std::string& file,
            const csv::Table& t, const std::string& plot = "") {
    csv::write_file(path(file), t);
    artifacts_.push_back({"table", anchor, path(file), plot});
  }

  void gap(const std::string& what) { gaps_.push_back(what); }

  // -- shared series construction ---------------------------------------

  void prepare(const ElicitStage& e) {
    const Date dmin = c_.date_min.value_or(Date{1, 1, 1});
    const Date dmax = c_.effective_date_max();
    for (const auto& [id, responses] : e.responses) {
      auto dated = date_responses(responses, e.articles);
      std::vector<DatedDirection> kept;
      for (auto& r : dated)
        if (!(r.date < dmin) && !(dmax < r.date)) kept.push_back(r);
      dated_[id] = kept;
      monthly3_[id] =
          window_aggregate(kept, c_.window_months, Frequency::Monthly,
                           c_.min_count, id);
      quarterly_[id] =
          window_aggregate(kept, 1, Frequency::Quarterly, c_.min_count, id);
      daily_[id] = window_aggregate(kept, 1, Frequency::Daily, 1, id);
    }

    if (!c_.aaii_path.empty()) {
      aaii_ = load_aaii_file(c_.aaii_path, dmin, dmax);
      // Quarterly AAII: mean of its monthly values, dated at the last month
      // of each quarter so monthly alignment hits quarter end.
      aaii_quarterly_.id = "AAII";
      aaii_quarterly_.frequency = Frequency::Quarterly;
      std::map<int, std::pair<double, int>> byq;
      for (const auto& p : aaii_->monthly.observations)
        if (p.value) {
          auto& [s, n] = byq[quarter_key(p.date)];
          s += *p.value;
          ++n;
        }
      for (const auto& [q, sn] : byq)
        aaii_quarterly_.observations.push_back(
            {month_start(q * 3 + 2), sn.first / sn.second, 0, 0, 0});
    }
    if (!c_.cfo_path.empty()) {
      cfo_ = load_cfo_file(c_.cfo_path);
      clip(cfo_->observations, dmin, dmax);
    }
    if (!c_.spf_forecasts_path.empty()) {
      spf_ = load_spf_file(c_.spf_forecasts_path);
      if (!c_.spf_realized_path.empty())
        attach_realized(spf_->panel, csv::read_file(c_.spf_realized_path));
      const int qmin = quarter_key(dmin), qmax = quarter_key(dmax);
      std::vector<SpfObservation> kept;
      for (auto& o : spf_->panel.observations)
        if (o.survey_quarter >= qmin && o.survey_quarter <= qmax)
          kept.push_back(o);
      spf_->panel.observations = std::move(kept);
      for (auto& [key, s] : spf_->levels) clip(s.observations, dmin, dmax);
      for (auto& [key, s] : spf_->revisions) clip(s.observations, dmin, dmax);
    }
    if (!c_.predictors_path.empty()) {
      predictors_ = load_predictors_file(c_.predictors_path);
      std::vector<std::string> to_diff;
      for (const char* name : {"log_dp", "cay"})
        if (predictors_->columns.count(name)) to_diff.push_back(name);
      compute_changes(*predictors_, to_diff);
      clip_predictors(dmin, dmax);
    }
  }

  static void clip(std::vector<SeriesPoint>& pts, Date lo, Date hi) {
    std::vector<SeriesPoint> kept;
    for (auto& p : pts)
      if (!(p.date < lo) && !(hi < p.date)) kept.push_back(p);
    pts = std::move(kept);
  }

  void clip_predictors(Date lo, Date hi) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < predictors_->dates.size(); ++i)
      if (!(predictors_->dates[i] < lo) && !(hi < predictors_->dates[i]))
        keep.push_back(i);
    PredictorTable t;
    for (auto i : keep) t.dates.push_back(predictors_->dates[i]);
    for (auto& [name, col] : predictors_->columns) {
      auto& dst = t.columns[name];
      for (auto i : keep) dst.push_back(col[i]);
    }
    *predictors_ = std::move(t);
  }

  // Monthly GPT value looked up at the month of each benchmark observation.
  static std::pair<std::vector<double>, std::vector<double>> align_monthly(
      const ExpectationSeries& gpt, const std::vector<SeriesPoint>& bench) {
    std::map<int, double> by_month;
    for (const auto& p : gpt.observations)
      if (p.value) by_month[month_key(p.date)] = *p.value;
    std::vector<double> a, b;
    for (const auto& p : bench) {
      if (!p.value) continue;
      auto it = by_month.find(month_key(p.date));
      if (it == by_month.end()) continue;
      a.push_back(it->second);
      b.push_back(*p.value);
    }
    return {std::move(a), std::move(b)};
  }

  // -- Table 1 ----------------------------------------------------------

  void table1(const ElicitStage& e) {
    csv::Table t;
    t.header = {"series", "target_text", "n_responses", "n_missing",
                "inc_pct", "dec_pct", "unc_pct", "balance"};
    for (const auto& spec : catalog_for(c_)) {
      auto it = e.responses.find(spec.id);
      if (it == e.responses.end()) continue;
      DirectionCounts counts;
      int missing = 0;
      for (const auto& r : it->second) {
        if (r.direction == Direction::Missing) ++missing;
        counts.add(r.direction);
      }
      const int n = counts.n_inc + counts.n_dec + counts.n_unc;
      const auto bal = balance_statistic(counts);
      auto pct = [&](int k) {
        return n > 0 ? detail::fmt(100.0 * k / n) : std::string{};
      };
      t.rows.push_back({spec.id, spec.target_text, detail::fmt_int(n),
                        detail::fmt_int(missing), pct(counts.n_inc),
                        pct(counts.n_dec), pct(counts.n_unc),
                        detail::fmt(bal)});
    }
    emit("Tab1", "tab1_summary.csv", t);
  }

  void filter_table() {
    if (!filter_report_) return;
    csv::Table t;
    t.header = {"step", "removed"};
    for (const auto& [step, n] : filter_report_->removed)
      t.rows.push_back({step, detail::fmt_int(n)});
    t.rows.push_back({"input", detail::fmt_int(filter_report_->input_count)});
    t.rows.push_back({"output", detail::fmt_int(filter_report_->output_count)});
    emit("FilterReport", "filter_report.csv", t);
  }

  void series_tables() {
    for (const auto& [id, s] : monthly3_) {
      csv::Table t;
      t.header = {"date", "value", "n_inc", "n_dec", "n_unc"};
      for (const auto& p : s.observations)
        t.rows.push_back({to_string(p.date), detail::fmt(p.value),
                          detail::fmt_int(p.n_inc), detail::fmt_int(p.n_dec),
                          detail::fmt_int(p.n_unc)});
      emit("Series", "series_" + id + "_monthly.csv", t);
    }
  }

  // -- Fig 2: survey correlations over {1m, 2m, 3m, opt EWMA} ------------

  void fig2() {
    const auto it = dated_.find(equity_series_);
    if (it == dated_.end()) {
      gap("Fig2: no responses for series " + equity_series_);
      return;
    }
    struct Bench {
      std::string name;
      const std::vector<SeriesPoint>* obs;
      int lag;
    };
    std::vector<Bench> benches;
    if (cfo_) benches.push_back({"CFO", &cfo_->observations, c_.nw_lag_quarterly});
    if (aaii_) {
      benches.push_back({"AAII_Q", &aaii_quarterly_.observations,
                         c_.nw_lag_quarterly});
      benches.push_back({"AAII_M", &aaii_->monthly.observations,
                         c_.nw_lag_monthly});
    }
    if (benches.empty()) {
      gap("Fig2: no return-expectation benchmark file supplied");
      return;
    }

    csv::Table t;
    t.header = {"benchmark", "measure", "corr", "t_stat", "n", "lag",
                "lambda_star"};
    std::vector<std::string> bar_labels;
    std::vector<double> bar_values;
    for (const auto& bench : benches) {
      for (int w = 1; w <= 3; ++w) {
        const auto gpt = window_aggregate(it->second, w, Frequency::Monthly,
                                          c_.min_count, equity_series_);
        auto [a, b] = align_monthly(gpt, *bench.obs);
        try {
          const auto ct = correlation_test(a, b, bench.lag);
          t.rows.push_back({bench.name, std::to_string(w) + "m",
                            detail::fmt(ct.corr), detail::fmt(ct.t_stat),
                            detail::fmt_int(ct.n), detail::fmt_int(ct.lag),
                            ""});
          bar_labels.push_back(bench.name + " " + std::to_string(w) + "m");
          bar_values.push_back(ct.corr);
        } catch (const std::exception& ex) {
          gap("Fig2 " + bench.name + " " + std::to_string(w) + "m: " +
              ex.what());
        }
      }
      try {
        TimeSeries target;
        target.observations = *bench.obs;
        const auto search = optimize_lambda(daily_.at(equity_series_), target);
        const auto smoothed =
            ewma_aggregate(daily_.at(equity_series_), search.lambda_star);
        std::vector<Date> dates;
        for (const auto& p : *bench.obs)
          if (p.value) dates.push_back(p.date);
        const auto sampled = sample_at_dates(smoothed, dates);
        std::vector<double> a, b;
        std::size_t j = 0;
        for (const auto& p : *bench.obs) {
          if (!p.value) continue;
          if (sampled.observations[j].value) {
            a.push_back(*sampled.observations[j].value);
            b.push_back(*p.value);
          }
          ++j;
        }
        const auto ct = correlation_test(a, b, bench.lag);
        t.rows.push_back({bench.name, "optEWMA", detail::fmt(ct.corr),
                          detail::fmt(ct.t_stat), detail::fmt_int(ct.n),
                          detail::fmt_int(ct.lag),
                          detail::fmt(search.lambda_star)});
        bar_labels.push_back(bench.name + " optEWMA");
        bar_values.push_back(ct.corr);
      } catch (const std::exception& ex) {
        gap("Fig2 " + bench.name + " optEWMA: " + std::string(ex.what()));
      }
    }
    const std::string plot = path("fig2_correlations.svg");
    svg::bar_chart(plot, bar_labels, bar_values,
                   "Survey correlations of the elicited equity expectation");
    emit("Fig2", "fig2_correlations.csv", t, plot);
  }

  // -- Fig 3 (expectation correlates) and Fig 4 (predictive regressions) -

  struct MonthlyGrid {
    std::vector<int> months;  // consecutive month keys
    std::map<std::string, std::vector<std::optional<double>>> cols;
  };

  void fig3_fig4() {
    if (!predictors_) {
      gap("Fig3/Fig4: no predictor table supplied");
      return;
    }
    if (!predictors_->columns.count("market_return")) {
      gap("Fig3/Fig4: predictor table lacks market_return column");
      return;
    }
    const auto& dates = predictors_->dates;
    const auto& ret = predictors_->column("market_return");
    for (std::size_t i = 1; i < dates.size(); ++i)
      if (month_key(dates[i]) != month_key(dates[i - 1]) + 1) {
        gap("Fig3/Fig4: predictor months not consecutive, table skipped");
        return;
      }

    // Trailing 12-month cumulative return.
    std::vector<std::optional<double>> r12(dates.size());
    for (std::size_t i = 11; i < dates.size(); ++i) {
      double s = 0;
      bool ok = true;
      for (std::size_t j = i - 11; j <= i; ++j) {
        if (!ret[j]) { ok = false; break; }
        s += *ret[j];
      }
      if (ok) r12[i] = s;
    }

    // Composite ER indices on the predictor grid.
    std::vector<double> ret_filled;
    bool ret_complete = true;
    for (const auto& v : ret) {
      if (!v) { ret_complete = false; break; }
      ret_filled.push_back(*v);
    }
    std::vector<std::optional<double>> er_gs(dates.size()),
        er_gw(dates.size());
    if (ret_complete) {
      try {
        const std::vector<std::string> gs = {"log_dp", "tbill",
                                             "default_spread", "term_spread"};
        std::vector<std::vector<std::optional<double>>> cols;
        for (const auto& n : gs) cols.push_back(predictors_->column(n));
        er_gs = composite_er(ret_filled, cols, gs).index;
      } catch (const std::exception& ex) {
        gap("Fig3 composite ER (GS): " + std::string(ex.what()));
      }
      try {
        std::vector<std::string> gw;
        std::vector<std::vector<std::optional<double>>> cols;
        for (const auto& [name, col] : predictors_->columns) {
          if (name == "market_return" || name == "fund_flow") continue;
          if (name.rfind("d_", 0) == 0) continue;
          gw.push_back(name);
          cols.push_back(col);
        }
        er_gw = composite_er(ret_filled, cols, gw).index;
      } catch (const std::exception& ex) {
        gap("Fig3 composite ER (GW): " + std::string(ex.what()));
      }
    } else {
      gap("Fig3/Fig4: market_return has gaps, composite ER skipped");
    }

    // Expectation measures on the predictor month grid.
    std::map<std::string, std::vector<std::optional<double>>> measures;
    auto on_grid = [&](const std::vector<SeriesPoint>& obs) {
      std::map<int, double> by_month;
      for (const auto& p : obs)
        if (p.value) by_month[month_key(p.date)] = *p.value;
      std::vector<std::optional<double>> col(dates.size());
      for (std::size_t i = 0; i < dates.size(); ++i)
        if (auto it = by_month.find(month_key(dates[i])); it != by_month.end())
          col[i] = it->second;
      return col;
    };
    if (auto it = monthly3_.find(equity_series_); it != monthly3_.end())
      measures["GPT"] = on_grid(it->second.observations);
    if (aaii_) measures["AAII"] = on_grid(aaii_->monthly.observations);
    if (cfo_) measures["CFO"] = on_grid(cfo_->observations);

    // Fig 3: correlations of each measure with each correlate.
    std::vector<std::pair<std::string, const std::vector<std::optional<double>>*>>
        correlates = {{"r12", &r12}};
    for (const char* name :
         {"fund_flow", "log_dp", "d_log_dp", "cay", "d_cay"})
      if (predictors_->columns.count(name))
        correlates.emplace_back(name, &predictors_->column(name));
    correlates.emplace_back("comp_er_gs", &er_gs);
    correlates.emplace_back("comp_er_gw", &er_gw);

    csv::Table t3;
    t3.header = {"measure", "correlate", "corr", "t_stat", "n", "lag"};
    for (const auto& [mname, mcol] : measures) {
      const int lag = mname == "CFO" ? c_.nw_lag_quarterly : c_.nw_lag_monthly;
      for (const auto& [cname, ccol] : correlates) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < dates.size(); ++i)
          if (mcol[i] && (*ccol)[i]) {
            a.push_back(*mcol[i]);
            b.push_back(*(*ccol)[i]);
          }
        try {
          const auto ct = correlation_test(a, b, lag);
          t3.rows.push_back({mname, cname, detail::fmt(ct.corr),
                             detail::fmt(ct.t_stat), detail::fmt_int(ct.n),
                             detail::fmt_int(ct.lag)});
        } catch (const std::exception& ex) {
          gap("Fig3 " + mname + " vs " + cname + ": " + ex.what());
        }
      }
    }
    emit("Fig3", "fig3_correlates.csv", t3);

    // Fig 4: predictive regressions of future cumulative returns.
    if (ret_complete) {
      csv::Table t4;
      t4.header = {"measure", "horizon", "coef", "t_stat", "r2_pct", "n",
                   "lag"};
      measures.erase("CFO");  // quarterly, too sparse for the monthly grid
      measures["comp_er_gs"] = er_gs;
      measures["comp_er_gw"] = er_gw;
      const std::vector<int> horizons = {1, 3, 6, 12, 24};
      for (const auto& [mname, mcol] : measures) {
        // Longest contiguous run where the measure is present.
        std::size_t best_b = 0, best_e = 0, b = 0;
        for (std::size_t i = 0; i <= mcol.size(); ++i) {
          if (i == mcol.size() || !mcol[i]) {
            if (i - b > best_e - best_b) { best_b = b; best_e = i; }
            b = i + 1;
          }
        }
        if (best_e - best_b < 30) {
          gap("Fig4 " + mname + ": fewer than 30 contiguous months");
          continue;
        }
        std::vector<double> r, x;
        for (std::size_t i = best_b; i < best_e; ++i) {
          r.push_back(*ret[i]);
          x.push_back(*mcol[i]);
        }
        std::vector<std::string> warnings;
        for (const auto& pr :
             predictive_regression(r, x, horizons, &warnings)) {
          const auto& res = pr.result;
          t4.rows.push_back({mname, detail::fmt_int(pr.horizon),
                             detail::fmt(res.coefficients(1)),
                             detail::fmt(res.t_stats(1)),
                             detail::fmt(res.r_squared),
                             detail::fmt_int(res.n_obs),
                             detail::fmt_int(res.lag)});
        }
        for (const auto& w : warnings) gap("Fig4 " + mname + ": " + w);
      }
      emit("Fig4", "fig4_predictive.csv", t4);
    }
  }

  // -- Fig 5 / Fig 6 / Table 4: SPF battery ------------------------------

  // Benchmark column (after "SPF:") per catalog series, CG-excluded ids.
  std::map<std::string, std::string> spf_links() const {
    std::map<std::string, std::string> links;
    for (const auto& spec : catalog_for(c_))
      if (spec.benchmark.rfind("SPF:", 0) == 0)
        links[spec.id] = spec.benchmark.substr(4);
    return links;
  }

  void fig5_fig6_tab4() {
    if (!spf_) {
      gap("Fig5/Fig6/Tab4: no SPF forecast file supplied");
      return;
    }
    const auto links = spf_links();

    // GPT quarterly level and revision per linked series on the survey grid.
    struct QSeries {
      std::map<int, double> level;     // survey quarter -> value
      std::map<int, double> revision;  // q -> level(q) - level(q-1)
    };
    std::map<std::string, QSeries> gptq;
    for (const auto& [id, col] : links) {
      auto it = quarterly_.find(id);
      if (it == quarterly_.end()) continue;
      QSeries qs;
      for (const auto& p : it->second.observations)
        if (p.value) qs.level[quarter_key(p.date)] = *p.value;
      for (const auto& [q, v] : qs.level)
        if (auto prev = qs.level.find(q - 1); prev != qs.level.end())
          qs.revision[q] = v - prev->second;
      gptq[id] = std::move(qs);
    }

    // ---- Fig 5: level and revision correlations, per horizon + panel.
    csv::Table t5;
    t5.header = {"series", "horizon", "kind", "corr", "t_stat", "n", "lag"};
    struct PanelAcc {
      std::vector<std::vector<double>> a, b;
      std::vector<std::vector<int>> t;
    };
    std::map<std::pair<int, std::string>, PanelAcc> panels;  // (h, kind)
    for (const auto& [id, col] : links) {
      const auto git = gptq.find(id);
      if (git == gptq.end()) continue;
      for (int h = 0; h <= 4; ++h) {
        for (const char* kind : {"levels", "revisions"}) {
          const bool is_level = std::string(kind) == "levels";
          // No horizon-4 revision exists (it would need a horizon-5
          // forecast from the prior survey).
          if (!is_level && h == 4) continue;
          const auto& spf_map = is_level ? spf_->levels : spf_->revisions;
          auto sit = spf_map.find({col, h});
          if (sit == spf_map.end()) continue;
          const auto& gpt_map =
              is_level ? git->second.level : git->second.revision;
          std::vector<double> a, b;
          std::vector<int> qs;
          for (const auto& p : sit->second.observations) {
            if (!p.value) continue;
            const int q = quarter_key(p.date);
            auto vit = gpt_map.find(q);
            if (vit == gpt_map.end()) continue;
            a.push_back(vit->second);
            b.push_back(*p.value);
            qs.push_back(q);
          }
          try {
            const auto ct = correlation_test(a, b, c_.nw_lag_quarterly);
            t5.rows.push_back({id, detail::fmt_int(h), kind,
                               detail::fmt(ct.corr), detail::fmt(ct.t_stat),
                               detail::fmt_int(ct.n), detail::fmt_int(ct.lag)});
          } catch (const std::exception& ex) {
            gap("Fig5 " + id + " h" + std::to_string(h) + " " + kind + ": " +
                ex.what());
          }
          if (a.size() >= 3) {
            auto& acc = panels[{h, kind}];
            acc.a.push_back(std::move(a));
            acc.b.push_back(std::move(b));
            acc.t.push_back(std::move(qs));
          }
        }
      }
    }
    for (const auto& [key, acc] : panels) {
      try {
        const auto ct =
            panel_correlation_test(acc.a, acc.b, acc.t, c_.nw_lag_quarterly);
        t5.rows.push_back({"PANEL", detail::fmt_int(key.first), key.second,
                           detail::fmt(ct.corr), detail::fmt(ct.t_stat),
                           detail::fmt_int(ct.n), detail::fmt_int(ct.lag)});
      } catch (const std::exception& ex) {
        gap("Fig5 panel h" + std::to_string(key.first) + " " + key.second +
            ": " + ex.what());
      }
    }
    emit("Fig5", "fig5_spf_correlations.csv", t5);

    // Per-observation aligned rows for CG and the memorization regression.
    struct Cell {
      std::optional<double> error, revision, realized, gpt;
    };
    // (series, horizon 0..4, survey quarter) -> cell
    std::map<std::tuple<std::string, int, int>, Cell> cells;
    std::map<std::string, std::string> col_to_id;
    for (const auto& [id, col] : links) col_to_id[col] = id;
    for (const auto& o : spf_->panel.observations) {
      auto idit = col_to_id.find(o.series);
      if (idit == col_to_id.end()) continue;
      Cell cell;
      cell.error = o.error;
      cell.revision = o.revision;
      cell.realized = o.realized;
      cells[{idit->second, o.horizon, o.survey_quarter}] = cell;
    }
    // Horizon-average rows: need all four horizons for each component.
    {
      std::map<std::pair<std::string, int>,
               std::array<std::array<std::optional<double>, 4>, 3>>
          acc;  // (id, q) -> [component][h-1]
      for (const auto& [key, cell] : cells) {
        const auto& [id, h, q] = key;
        auto& slot = acc[{id, q}];
        slot[0][h - 1] = cell.error;
        slot[1][h - 1] = cell.revision;
        slot[2][h - 1] = cell.realized;
      }
      for (const auto& [key, slot] : acc) {
        Cell cell;
        auto avg = [](const std::array<std::optional<double>, 4>& v,
                      int maxh) -> std::optional<double> {
          double s = 0;
          for (int h = 0; h < maxh; ++h) {
            if (!v[h]) return std::nullopt;
            s += *v[h];
          }
          return s / maxh;
        };
        // Revisions average horizons 1-3 (no horizon-4 revision exists).
        cell.error = avg(slot[0], 4);
        cell.revision = avg(slot[1], 3);
        cell.realized = avg(slot[2], 4);
        cells[{key.first, 0, key.second}] = cell;
      }
    }
    for (auto& [key, cell] : cells) {
      const auto& [id, h, q] = key;
      auto git = gptq.find(id);
      if (git == gptq.end()) continue;
      if (auto vit = git->second.level.find(q); vit != git->second.level.end())
        cell.gpt = vit->second;
    }

    // ---- Fig 6: CG regressions, SPF mode and GPT mode.
    const std::set<std::string> cg_excluded = {"GF", "GS"};
    csv::Table t6;
    t6.header = {"series", "horizon", "mode", "slope_std", "t_stat",
                 "slope_raw", "n", "lag"};
    for (const char* mode : {"spf", "gpt"}) {
      for (int h = 0; h <= 4; ++h) {
        if (std::string(mode) == "spf" && h == 4) continue;
        PanelAcc pan;
        for (const auto& [id, col] : links) {
          if (cg_excluded.count(id)) continue;
          std::vector<double> errs, regs;
          std::vector<int> qs;
          for (const auto& [key, cell] : cells) {
            const auto& [cid, ch, q] = key;
            if (cid != id || ch != h) continue;
            const auto& reg =
                std::string(mode) == "spf" ? cell.revision : cell.gpt;
            if (!cell.error || !reg) continue;
            errs.push_back(*cell.error);
            regs.push_back(*reg);
            qs.push_back(q);
          }
          try {
            const auto cg = cg_regression(errs, regs, c_.nw_lag_quarterly);
            t6.rows.push_back(
                {id, detail::fmt_int(h), mode,
                 detail::fmt(cg.standardized.coefficients(1)),
                 detail::fmt(cg.standardized.t_stats(1)),
                 detail::fmt(cg.raw.coefficients(1)),
                 detail::fmt_int(cg.raw.n_obs),
                 detail::fmt_int(cg.raw.lag)});
          } catch (const std::exception& ex) {
            gap("Fig6 " + id + " h" + std::to_string(h) + " " + mode + ": " +
                ex.what());
          }
          if (errs.size() >= 3) {
            pan.a.push_back(std::move(errs));
            pan.b.push_back(std::move(regs));
            pan.t.push_back(std::move(qs));
          }
        }
        if (pan.a.size() > 1) {
          try {
            const auto cg = cg_regression_panel(pan.a, pan.b, pan.t,
                                                c_.nw_lag_quarterly);
            t6.rows.push_back(
                {"PANEL", detail::fmt_int(h), mode,
                 detail::fmt(cg.standardized.coefficients(1)),
                 detail::fmt(cg.standardized.t_stats(1)),
                 detail::fmt(cg.raw.coefficients(1)),
                 detail::fmt_int(cg.raw.n_obs),
                 detail::fmt_int(cg.raw.lag)});
          } catch (const std::exception& ex) {
            gap("Fig6 panel h" + std::to_string(h) + " " + mode + ": " +
                ex.what());
          }
        }
      }
    }
    emit("Fig6", "fig6_cg.csv", t6);

    // ---- Table 4: GPT on SPF revision and realized value jointly, DK.
    csv::Table tm;
    tm.header = {"horizon", "coef_revision", "t_revision", "coef_realized",
                 "t_realized", "r2_pct", "n", "lag"};
    for (int h = 0; h <= 3; ++h) {
      std::vector<double> y;
      std::vector<double> xrev, xreal;
      std::vector<int> qs;
      for (const auto& [key, cell] : cells) {
        const auto& [id, ch, q] = key;
        if (ch != h) continue;
        if (!cell.gpt || !cell.revision || !cell.realized) continue;
        y.push_back(*cell.gpt);
        xrev.push_back(*cell.revision);
        xreal.push_back(*cell.realized);
        qs.push_back(q);
      }
      try {
        const int n = static_cast<int>(y.size());
        VectorXd yv = Eigen::Map<const VectorXd>(y.data(), n);
        MatrixXd X(n, 3);
        for (int i = 0; i < n; ++i) {
          X(i, 0) = 1.0;
          X(i, 1) = xrev[i];
          X(i, 2) = xreal[i];
        }
        const auto res =
            panel_regression(yv, X, qs, c_.nw_lag_quarterly,
                             {"intercept", "revision", "realized"});
        tm.rows.push_back({detail::fmt_int(h),
                           detail::fmt(res.coefficients(1)),
                           detail::fmt(res.t_stats(1)),
                           detail::fmt(res.coefficients(2)),
                           detail::fmt(res.t_stats(2)),
                           detail::fmt(res.r_squared),
                           detail::fmt_int(res.n_obs),
                           detail::fmt_int(res.lag)});
      } catch (const std::exception& ex) {
        gap("Tab4 h" + std::to_string(h) + ": " + ex.what());
      }
    }
    emit("Tab4", "tab4_memorization.csv", tm);
  }

  // -- Table 3: out-of-sample correlations -------------------------------

  void tab3(const ElicitStage& e) {
    const Date lo = from_days(to_days(c_.oos_cutoff) + 1);
    const Date hi = c_.effective_date_max();
    if (hi < lo) {
      gap("Tab3: OOS window empty");
      return;
    }
    csv::Table t;
    t.header = {"benchmark", "horizon", "corr", "t_stat", "n", "lag"};

    if (aaii_) {
      std::vector<Date> weeks;
      std::vector<double> bench;
      for (const auto& p : aaii_->weekly.observations)
        if (p.value && !(p.date < lo) && !(hi < p.date)) {
          weeks.push_back(p.date);
          bench.push_back(*p.value);
        }
      auto dit = e.responses.find(equity_series_);
      if (dit != e.responses.end() && !weeks.empty()) {
        auto dated = date_responses(dit->second, e.articles);
        const auto gpt = trailing_balance_at(dated, weeks, 7, c_.min_count,
                                             equity_series_);
        std::vector<double> a, b;
        for (std::size_t i = 0; i < weeks.size(); ++i)
          if (gpt.observations[i].value) {
            a.push_back(*gpt.observations[i].value);
            b.push_back(bench[i]);
          }
        try {
          const auto ct = correlation_test(a, b, c_.nw_lag_monthly);
          t.rows.push_back({"AAII_weekly", "", detail::fmt(ct.corr),
                            detail::fmt(ct.t_stat), detail::fmt_int(ct.n),
                            detail::fmt_int(ct.lag)});
        } catch (const std::exception& ex) {
          gap("Tab3 AAII weekly: " + std::string(ex.what()));
        }
      }
    } else {
      gap("Tab3: no AAII file supplied");
    }

    if (spf_) {
      const auto links = spf_links();
      const int qlo = quarter_key(lo), qhi = quarter_key(hi);
      for (int h = 0; h <= 4; ++h) {
        std::vector<std::vector<double>> a, b;
        std::vector<std::vector<int>> qs;
        for (const auto& [id, col] : links) {
          auto git = quarterly_.find(id);
          auto sit = spf_->levels.find({col, h});
          if (git == quarterly_.end() || sit == spf_->levels.end()) continue;
          std::map<int, double> gq;
          for (const auto& p : git->second.observations)
            if (p.value) gq[quarter_key(p.date)] = *p.value;
          std::vector<double> va, vb;
          std::vector<int> vq;
          for (const auto& p : sit->second.observations) {
            if (!p.value) continue;
            const int q = quarter_key(p.date);
            if (q < qlo || q > qhi) continue;
            auto vit = gq.find(q);
            if (vit == gq.end()) continue;
            va.push_back(vit->second);
            vb.push_back(*p.value);
            vq.push_back(q);
          }
          if (va.size() >= 3) {
            a.push_back(std::move(va));
            b.push_back(std::move(vb));
            qs.push_back(std::move(vq));
          }
        }
        try {
          const auto ct = panel_correlation_test(a, b, qs,
                                                 c_.nw_lag_quarterly);
          t.rows.push_back({"SPF_panel", detail::fmt_int(h),
                            detail::fmt(ct.corr), detail::fmt(ct.t_stat),
                            detail::fmt_int(ct.n), detail::fmt_int(ct.lag)});
        } catch (const std::exception& ex) {
          gap("Tab3 SPF h" + std::to_string(h) + ": " + ex.what());
        }
      }
    } else {
      gap("Tab3: no SPF file supplied");
    }
    emit("Tab3", "tab3_oos.csv", t);
  }

  // -- Appendix B: cooccurrence ------------------------------------------

  void appendix_b(const ElicitStage& e) {
    std::vector<DirectionalResponse> all;
    for (const auto& [id, rs] : e.responses)
      all.insert(all.end(), rs.begin(), rs.end());
    const auto m = cooccurrence_matrix(all);
    csv::Table t;
    t.header = {"series_row", "series_col", "inc_inc", "inc_dec", "dec_inc",
                "dec_dec"};
    const std::size_t K = m.series_ids.size();
    std::vector<std::vector<std::optional<double>>> heat(
        K, std::vector<std::optional<double>>(K));
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t k = 0; k < K; ++k) {
        const auto& cell = m.at(j, k);
        t.rows.push_back({m.series_ids[j], m.series_ids[k],
                          detail::fmt(cell[0][0]), detail::fmt(cell[0][1]),
                          detail::fmt(cell[1][0]), detail::fmt(cell[1][1])});
        heat[j][k] = cell[0][0];
      }
    const std::string plot = path("appB_cooccurrence.svg");
    svg::heatmap(plot, m.series_ids, m.series_ids, heat,
                 "Increase-increase cooccurrence proportions");
    emit("AppB", "appB_cooccurrence.csv", t, plot);
  }

  // -- manifest ----------------------------------------------------------

  void manifest() {
    nlohmann::json j;
    j["version"] = GPTSURVEY_VERSION;
    j["config_hash"] = fingerprint_;
    j["created"] = gptsurvey::detail::now_iso8601();
    j["pre2019"] = c_.pre2019;
    j["date_max_effective"] = to_string(c_.effective_date_max());
    j["oos_cutoff"] = to_string(c_.oos_cutoff);
    auto arts = nlohmann::json::array();
    for (const auto& a : artifacts_)
      arts.push_back({{"kind", a.kind},
                      {"anchor", a.anchor},
                      {"data", a.data_path},
                      {"plot", a.plot_path}});
    j["artifacts"] = arts;
    j["gaps"] = gaps_;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << j.dump(2) << '\n';
  }

  RunConfig c_;
  std::string fingerprint_;
  std::string equity_series_ = "SNP";
  std::optional<FilterReport> filter_report_;
  std::vector<ReportArtifact> artifacts_;
  std::vector<std::string> gaps_;

  std::map<std::string, std::vector<DatedDirection>> dated_;
  std::map<std::string, ExpectationSeries> monthly3_, quarterly_, daily_;
  std::optional<AaiiData> aaii_;
  TimeSeries aaii_quarterly_;
  std::optional<TimeSeries> cfo_;
  std::optional<SpfData> spf_;
  std::optional<PredictorTable> predictors_;
};

// ---------------------------------------------------------------------------
// One-call pipeline: filter -> sample -> elicit -> validate.

struct ValidateRun {
  std::vector<ReportArtifact> artifacts;
  std::vector<std::string> gaps;
  FilterReport filter_report;
  QueryStats query_stats;
};

inline ValidateRun run_validate(const RunConfig& c,
                                const std::string& config_fingerprint = "") {
  auto filtered = run_filter(c);
  auto sampled = sample_monthly(filtered.articles, c.sample_per_month, c.seed);
  auto provider = make_provider(c);
  ResponseCache cache(c.cache_path);
  auto elicited = run_elicit(c, sampled.articles, *provider, cache);

  ReportWriter writer(c, config_fingerprint);
  writer.set_filter_report(filtered.report);
  ValidateRun out;
  out.artifacts = writer.validate(elicited);
  out.gaps = writer.gaps();
  out.filter_report = filtered.report;
  out.query_stats = elicited.stats;
  return out;
}

}  // namespace gptsurvey
