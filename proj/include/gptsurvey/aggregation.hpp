#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gptsurvey/date.hpp"
#include "gptsurvey/elicitation.hpp"
#include "gptsurvey/series.hpp"

namespace gptsurvey {

struct DirectionCounts {
  int n_inc = 0;
  int n_dec = 0;
  int n_unc = 0;

  DirectionCounts& operator+=(const DirectionCounts& o) {
    n_inc += o.n_inc;
    n_dec += o.n_dec;
    n_unc += o.n_unc;
    return *this;
  }

  void add(Direction d) {
    if (d == Direction::Increase) ++n_inc;
    else if (d == Direction::Decrease) ++n_dec;
    else if (d == Direction::Uncertain) ++n_unc;
    // Missing stays out of every count.
  }

  int directional() const { return n_inc + n_dec; }
};

// (#Inc - #Dec) / (#Inc + #Dec); Uncertain and Missing excluded from both
// sides. Thin periods (below min_count directional answers) are missing.
inline std::optional<double> balance_statistic(const DirectionCounts& c,
                                               int min_count = 0) {
  const int denom = c.directional();
  if (denom == 0 || denom < min_count) return std::nullopt;
  return static_cast<double>(c.n_inc - c.n_dec) / static_cast<double>(denom);
}

struct DatedDirection {
  Date date;
  Direction direction = Direction::Missing;
};

inline std::vector<DatedDirection> date_responses(
    const std::vector<DirectionalResponse>& responses,
    const std::vector<Article>& articles) {
  std::map<std::string, Date> dates;
  for (const auto& a : articles) dates[a.id] = a.date;
  std::vector<DatedDirection> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    auto it = dates.find(r.article_id);
    if (it == dates.end())
      throw std::runtime_error("response for unknown article " + r.article_id);
    out.push_back({it->second, r.direction});
  }
  return out;
}

// Trailing-window balance series. Monthly: the value at month m pools the
// responses of months (m-w+1 .. m). Quarterly: the value at quarter q pools
// the quarter prior to q (the surveyed period convention). Daily: per-day
// balances, the input to the EWMA.
inline ExpectationSeries window_aggregate(const std::vector<DatedDirection>& rs,
                                          int window_months, Frequency freq,
                                          int min_count = 10,
                                          const std::string& series_id = "") {
  if (window_months < 1)
    throw std::invalid_argument("window_aggregate: window_months must be >= 1");
  ExpectationSeries out;
  out.series_id = series_id;
  out.frequency = freq;
  out.meta = {"window", window_months, 0.0, min_count};

  if (freq == Frequency::Daily) {
    std::map<std::int64_t, DirectionCounts> by;
    for (const auto& r : rs)
      if (r.direction != Direction::Missing) by[to_days(r.date)].add(r.direction);
    for (const auto& [day, c] : by)
      out.observations.push_back({from_days(day), balance_statistic(c, min_count),
                                  c.n_inc, c.n_dec, c.n_unc});
    return out;
  }

  std::map<int, DirectionCounts> by_month;
  for (const auto& r : rs)
    if (r.direction != Direction::Missing)
      by_month[month_key(r.date)].add(r.direction);
  if (by_month.empty()) return out;
  const int first = by_month.begin()->first;
  const int last = by_month.rbegin()->first;

  if (freq == Frequency::Monthly) {
    for (int m = first; m <= last; ++m) {
      DirectionCounts pooled;
      for (int k = m - window_months + 1; k <= m; ++k)
        if (auto it = by_month.find(k); it != by_month.end())
          pooled += it->second;
      out.observations.push_back({month_start(m),
                                  balance_statistic(pooled, min_count),
                                  pooled.n_inc, pooled.n_dec, pooled.n_unc});
    }
    return out;
  }

  if (freq == Frequency::Quarterly) {
    const int fq = quarter_key(month_start(first));
    const int lq = quarter_key(month_start(last));
    for (int q = fq + 1; q <= lq + 1; ++q) {
      DirectionCounts pooled;  // the quarter prior to q
      const Date prior = quarter_start(q - 1);
      for (int m = month_key(prior); m < month_key(prior) + 3; ++m)
        if (auto it = by_month.find(m); it != by_month.end())
          pooled += it->second;
      out.observations.push_back({quarter_start(q),
                                  balance_statistic(pooled, min_count),
                                  pooled.n_inc, pooled.n_dec, pooled.n_unc});
    }
    return out;
  }

  throw std::invalid_argument("window_aggregate: unsupported frequency");
}

// Balance over a trailing window of calendar days ending at each given date
// (inclusive). Used to place article-level responses on a weekly survey grid.
inline ExpectationSeries trailing_balance_at(
    const std::vector<DatedDirection>& rs, const std::vector<Date>& dates,
    int trailing_days, int min_count = 10, const std::string& series_id = "") {
  std::map<std::int64_t, DirectionCounts> by;
  for (const auto& r : rs)
    if (r.direction != Direction::Missing) by[to_days(r.date)].add(r.direction);
  ExpectationSeries out;
  out.series_id = series_id;
  out.frequency = Frequency::Weekly;
  out.meta = {"trailing_days", trailing_days, 0.0, min_count};
  for (const Date& d : dates) {
    const std::int64_t end = to_days(d);
    DirectionCounts pooled;
    for (auto it = by.lower_bound(end - trailing_days + 1);
         it != by.end() && it->first <= end; ++it)
      pooled += it->second;
    out.observations.push_back({d, balance_statistic(pooled, min_count),
                                pooled.n_inc, pooled.n_dec, pooled.n_unc});
  }
  return out;
}

// EWMA over daily balances with weights renormalized over the non-missing
// terms, so gaps in news coverage do not bias the level:
//   v_t = sum_k lambda^k b_{t-k} / sum_k lambda^k  (non-missing k only).
inline ExpectationSeries ewma_aggregate(const ExpectationSeries& daily,
                                        double lambda) {
  if (daily.frequency != Frequency::Daily)
    throw std::invalid_argument("ewma_aggregate: input must be daily");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("ewma_aggregate: lambda must be in (0,1)");
  ExpectationSeries out;
  out.series_id = daily.series_id;
  out.frequency = Frequency::Daily;
  out.meta = {"ewma", 0, lambda, daily.meta.min_count};
  double num = 0.0, den = 0.0;
  std::optional<std::int64_t> prev;
  for (const auto& p : daily.observations) {
    const std::int64_t day = to_days(p.date);
    if (prev) {
      const double f = std::pow(lambda, static_cast<double>(day - *prev));
      num *= f;
      den *= f;
    }
    prev = day;
    if (p.value) {
      num += *p.value;
      den += 1.0;
    }
    SeriesPoint q = p;
    q.value = den > 0 ? std::optional<double>(num / den) : std::nullopt;
    out.observations.push_back(q);
  }
  return out;
}

// Most recent observation at or before each date; missing when none exists.
inline ExpectationSeries sample_at_dates(const ExpectationSeries& s,
                                         const std::vector<Date>& dates) {
  ExpectationSeries out;
  out.series_id = s.series_id;
  out.frequency = Frequency::Weekly;
  out.meta = s.meta;
  std::size_t i = 0;
  std::optional<double> current;
  for (const Date& d : dates) {
    while (i < s.observations.size() && !(d < s.observations[i].date)) {
      if (s.observations[i].value) current = s.observations[i].value;
      ++i;
    }
    out.observations.push_back({d, current, 0, 0, 0});
  }
  return out;
}

struct LambdaSearchResult {
  double lambda_star = 0.0;
  double correlation_at_star = 0.0;
  std::vector<std::pair<double, double>> grid;  // (lambda, corr)
};

// In-sample grid search over lambda in {0.800, 0.801, ..., 0.999}; the
// EWMA is sampled at the target's dates and scored by Pearson correlation.
// Ties break toward the smallest lambda.
inline LambdaSearchResult optimize_lambda(const ExpectationSeries& daily,
                                          const TimeSeries& target) {
  std::vector<Date> dates;
  for (const auto& p : target.observations)
    if (p.value) dates.push_back(p.date);

  LambdaSearchResult best;
  bool have_best = false;
  for (int i = 0; i <= 199; ++i) {
    const double lambda = 0.800 + 0.001 * i;
    const auto smoothed = sample_at_dates(ewma_aggregate(daily, lambda), dates);
    std::vector<double> a, b;
    std::size_t j = 0;
    for (const auto& p : target.observations) {
      if (!p.value) continue;
      if (smoothed.observations[j].value) {
        a.push_back(*smoothed.observations[j].value);
        b.push_back(*p.value);
      }
      ++j;
    }
    if (a.size() < 24)
      throw std::invalid_argument(
          "optimize_lambda: need >= 24 overlapping observations, have " +
          std::to_string(a.size()));
    const double corr = pearson(a, b);  // throws if target constant
    best.grid.emplace_back(lambda, corr);
    if (!have_best || corr > best.correlation_at_star) {
      best.lambda_star = lambda;
      best.correlation_at_star = corr;
      have_best = true;
    }
  }
  return best;
}

// Affine transform to sample mean 0, sample (n-1) sd 1; missing kept.
inline ExpectationSeries standardize(const ExpectationSeries& s) {
  std::vector<double> v;
  for (const auto& p : s.observations)
    if (p.value) v.push_back(*p.value);
  if (v.size() < 2)
    throw std::invalid_argument("standardize: need >= 2 observations");
  const double m = mean(v), sd = stddev(v);
  if (sd == 0) throw std::invalid_argument("standardize: zero variance");
  ExpectationSeries out = s;
  out.meta.method = s.meta.method + "+standardize";
  for (auto& p : out.observations)
    if (p.value) p.value = (*p.value - m) / sd;
  return out;
}

}  // namespace gptsurvey
