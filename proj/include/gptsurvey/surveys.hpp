#pragma once

#include <array>
#include <cmath>
#include <map>
#include <tuple>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gptsurvey/csv.hpp"
#include "gptsurvey/date.hpp"
#include "gptsurvey/series.hpp"

namespace gptsurvey {

namespace detail {

inline double to_double(const std::string& s, int lineno, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": bad " +
                             what + " '" + s + "'");
  }
}

inline Date to_date(const std::string& s, int lineno) {
  auto d = parse_date(s);
  if (!d)
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": bad date '" + s + "'");
  return *d;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// AAII: weekly bull/bear/neutral percentages.

struct AaiiData {
  TimeSeries weekly;   // bull minus bear, in [-1, 1]
  TimeSeries monthly;  // mean of the weeks falling in each month
  std::vector<std::string> warnings;
};

// Columns: date, bullish, bearish, neutral (percent). Rows whose three
// percentages do not sum to 100 +- 1 are rejected with a warning.
inline AaiiData load_aaii(const csv::Table& t,
                          std::optional<Date> date_min = std::nullopt,
                          std::optional<Date> date_max = std::nullopt) {
  const int cd = t.require_column("date");
  const int cb = t.require_column("bullish");
  const int cr = t.require_column("bearish");
  const int cn = t.require_column("neutral");

  AaiiData out;
  out.weekly.id = "AAII";
  out.weekly.frequency = Frequency::Weekly;
  int lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    const Date d = detail::to_date(row[cd], lineno);
    if ((date_min && d < *date_min) || (date_max && *date_max < d)) continue;
    const double bull = detail::to_double(row[cb], lineno, "bullish");
    const double bear = detail::to_double(row[cr], lineno, "bearish");
    const double neut = detail::to_double(row[cn], lineno, "neutral");
    if (std::abs(bull + bear + neut - 100.0) > 1.0) {
      out.warnings.push_back("line " + std::to_string(lineno) +
                             ": percentages sum to " +
                             std::to_string(bull + bear + neut) + ", rejected");
      continue;
    }
    out.weekly.observations.push_back({d, (bull - bear) / 100.0, 0, 0, 0});
  }
  sort_points(out.weekly.observations);
  check_strictly_increasing(out.weekly.observations, "AAII weekly");

  out.monthly.id = "AAII";
  out.monthly.frequency = Frequency::Monthly;
  std::map<int, std::pair<double, int>> by_month;
  for (const auto& p : out.weekly.observations)
    if (p.value) {
      auto& [sum, cnt] = by_month[month_key(p.date)];
      sum += *p.value;
      ++cnt;
    }
  for (const auto& [mk, sc] : by_month)
    out.monthly.observations.push_back(
        {month_start(mk), sc.first / sc.second, 0, 0, 0});
  return out;
}

inline AaiiData load_aaii_file(const std::string& path,
                               std::optional<Date> date_min = std::nullopt,
                               std::optional<Date> date_max = std::nullopt) {
  return load_aaii(csv::read_file(path), date_min, date_max);
}

// ---------------------------------------------------------------------------
// CFO survey: quarterly expected 12-month U.S. stock-market return.

inline TimeSeries load_cfo(const csv::Table& t) {
  const int cd = t.require_column("date");
  const int cv = t.require_column("expected_return");
  TimeSeries out;
  out.id = "CFO";
  out.frequency = Frequency::Quarterly;
  int lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    out.observations.push_back(
        {detail::to_date(row[cd], lineno),
         detail::to_double(row[cv], lineno, "expected_return"), 0, 0, 0});
  }
  sort_points(out.observations);
  check_strictly_increasing(out.observations, "CFO");
  return out;
}

inline TimeSeries load_cfo_file(const std::string& path) {
  return load_cfo(csv::read_file(path));
}

// ---------------------------------------------------------------------------
// SPF: consensus forecasts per series, survey quarter, horizon 1-4.

struct SpfObservation {
  std::string series;
  int survey_quarter = 0;  // quarter key of the survey date
  int horizon = 0;         // quarters ahead
  int target_quarter = 0;  // survey_quarter + horizon (fixed event)
  double forecast = 0.0;
  std::optional<double> revision;  // F_t - F_{t-1}, same target
  std::optional<double> realized;
  std::optional<double> error;     // realized - forecast
};

struct FixedTargetPanel {
  std::vector<SpfObservation> observations;
  std::string realized_vintage;  // "first_release" | "latest" | ""
};

struct SpfData {
  FixedTargetPanel panel;
  std::vector<std::string> series_ids;
  // Per (series, horizon): level and revision series on the survey-quarter
  // grid; horizon 0 holds the 1-4 average where all four horizons exist.
  std::map<std::pair<std::string, int>, TimeSeries> levels;
  std::map<std::pair<std::string, int>, TimeSeries> revisions;
};

// Forecast table columns: series, date (survey quarter), horizon, forecast.
// The revision at horizon h for target tau is this quarter's h-step forecast
// minus last quarter's (h+1)-step forecast of the same target; a missing
// h+1 forecast leaves the revision missing, never proxied.
inline SpfData load_spf(const csv::Table& t,
                        const std::vector<std::string>& series_filter = {}) {
  const int cs = t.require_column("series");
  const int cd = t.require_column("date");
  const int ch = t.require_column("horizon");
  const int cf = t.require_column("forecast");

  std::set<std::string> wanted(series_filter.begin(), series_filter.end());
  // (series, survey_quarter, horizon) -> forecast
  std::map<std::tuple<std::string, int, int>, double> f;
  std::set<std::string> ids;
  int lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    const std::string series = row[cs];
    if (!wanted.empty() && !wanted.count(series)) continue;
    const int q = quarter_key(detail::to_date(row[cd], lineno));
    const int h = static_cast<int>(detail::to_double(row[ch], lineno, "horizon"));
    if (h < 1 || h > 4)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": horizon must be 1-4");
    const double v = detail::to_double(row[cf], lineno, "forecast");
    if (!f.emplace(std::make_tuple(series, q, h), v).second)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": duplicate (series, date, horizon)");
    ids.insert(series);
  }

  SpfData out;
  out.series_ids.assign(ids.begin(), ids.end());
  for (const auto& [key, fc] : f) {
    const auto& [series, q, h] = key;
    SpfObservation o;
    o.series = series;
    o.survey_quarter = q;
    o.horizon = h;
    o.target_quarter = q + h;
    o.forecast = fc;
    if (auto it = f.find(std::make_tuple(series, q - 1, h + 1)); it != f.end())
      o.revision = fc - it->second;
    out.panel.observations.push_back(std::move(o));
  }

  // Per-horizon series plus the 1-4 average (horizon key 0).
  for (const auto& id : out.series_ids) {
    std::map<int, std::array<std::optional<double>, 5>> lev, rev;  // [h]
    for (const auto& o : out.panel.observations) {
      if (o.series != id) continue;
      lev[o.survey_quarter][o.horizon] = o.forecast;
      rev[o.survey_quarter][o.horizon] = o.revision;
    }
    for (int h = 0; h <= 4; ++h) {
      TimeSeries lt, rt;
      lt.id = id;
      rt.id = id;
      lt.frequency = rt.frequency = Frequency::Quarterly;
      for (const auto& [q, vals] : lev) {
        std::optional<double> lv, rv;
        if (h > 0) {
          lv = vals[h];
          rv = rev[q][h];
        } else {
          // Levels average horizons 1-4; revisions 1-3, since a horizon-4
          // revision would need a horizon-5 forecast from the prior survey.
          double ls = 0, rs = 0;
          bool all_l = true, all_r = true;
          for (int k = 1; k <= 4; ++k) {
            if (vals[k]) ls += *vals[k]; else all_l = false;
          }
          for (int k = 1; k <= 3; ++k) {
            if (rev[q][k]) rs += *rev[q][k]; else all_r = false;
          }
          if (all_l) lv = ls / 4.0;
          if (all_r) rv = rs / 3.0;
        }
        if (lv) lt.observations.push_back({quarter_start(q), lv, 0, 0, 0});
        if (rv) rt.observations.push_back({quarter_start(q), rv, 0, 0, 0});
      }
      out.levels[{id, h}] = std::move(lt);
      out.revisions[{id, h}] = std::move(rt);
    }
  }
  return out;
}

inline SpfData load_spf_file(const std::string& path,
                             const std::vector<std::string>& series = {}) {
  return load_spf(csv::read_file(path), series);
}

// Realized table columns: series, date (target quarter), value, optional
// vintage. Attaches realized values and forecast errors (realized minus
// forecast) to the panel in place.
inline void attach_realized(FixedTargetPanel& panel, const csv::Table& t) {
  const int cs = t.require_column("series");
  const int cd = t.require_column("date");
  const int cv = t.require_column("value");
  const int cvin = t.column("vintage");

  std::map<std::pair<std::string, int>, double> realized;
  std::string vintage = cvin >= 0 ? "" : "latest";
  int lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    if (cvin >= 0) {
      if (vintage.empty()) vintage = row[cvin];
      // First-release vintages preferred when the file carries both.
      if (row[cvin] == "first_release") vintage = "first_release";
      if (row[cvin] != vintage && vintage == "first_release") continue;
    }
    realized[{row[cs], quarter_key(detail::to_date(row[cd], lineno))}] =
        detail::to_double(row[cv], lineno, "value");
  }
  panel.realized_vintage = vintage;
  for (auto& o : panel.observations) {
    if (auto it = realized.find({o.series, o.target_quarter});
        it != realized.end()) {
      o.realized = it->second;
      o.error = it->second - o.forecast;
    }
  }
}

// ---------------------------------------------------------------------------
// Predictor table: date-indexed monthly columns, missing cells empty.

struct PredictorTable {
  std::vector<Date> dates;  // month-aligned, strictly increasing
  std::map<std::string, std::vector<std::optional<double>>> columns;

  const std::vector<std::optional<double>>& column(
      const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end())
      throw std::runtime_error("predictor column not found: " + name);
    return it->second;
  }

  int row_of_month(int mkey) const {
    for (std::size_t i = 0; i < dates.size(); ++i)
      if (month_key(dates[i]) == mkey) return static_cast<int>(i);
    return -1;
  }
};

inline PredictorTable load_predictors(const csv::Table& t) {
  const int cd = t.require_column("date");
  PredictorTable out;
  std::set<int> seen_months;
  std::vector<std::string> value_cols;
  for (const auto& h : t.header)
    if (h != "date") value_cols.push_back(h);
  for (const auto& name : value_cols) out.columns[name] = {};

  int lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    const Date d = detail::to_date(row[cd], lineno);
    if (!seen_months.insert(month_key(d)).second)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": duplicate date " + to_string(d));
    out.dates.push_back(d);
    for (const auto& name : value_cols) {
      const int c = t.column(name);
      const std::string& cell = row[c];
      out.columns[name].push_back(
          cell.empty() ? std::nullopt
                       : std::optional<double>(
                             detail::to_double(cell, lineno, name.c_str())));
    }
  }
  // Rows must arrive date-sorted; out-of-order input is an error.
  for (std::size_t i = 1; i < out.dates.size(); ++i)
    if (!(out.dates[i - 1] < out.dates[i]))
      throw std::runtime_error("predictor table dates not increasing at " +
                               to_string(out.dates[i]));
  return out;
}

inline PredictorTable load_predictors_file(const std::string& path) {
  return load_predictors(csv::read_file(path));
}

// 12-month difference by calendar month lookup; the first year is missing.
inline void compute_changes(PredictorTable& t,
                            const std::vector<std::string>& names) {
  std::map<int, int> row_by_month;
  for (std::size_t i = 0; i < t.dates.size(); ++i)
    row_by_month[month_key(t.dates[i])] = static_cast<int>(i);
  for (const auto& name : names) {
    const auto& col = t.column(name);
    std::vector<std::optional<double>> delta(col.size());
    for (std::size_t i = 0; i < t.dates.size(); ++i) {
      auto it = row_by_month.find(month_key(t.dates[i]) - 12);
      if (it == row_by_month.end()) continue;
      const auto& prev = col[it->second];
      if (col[i] && prev) delta[i] = *col[i] - *prev;
    }
    t.columns["d_" + name] = std::move(delta);
  }
}

}  // namespace gptsurvey
