#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gptsurvey/date.hpp"

namespace gptsurvey {

enum class Frequency { Daily, Weekly, Monthly, Quarterly };

inline const char* to_string(Frequency f) {
  switch (f) {
    case Frequency::Daily: return "daily";
    case Frequency::Weekly: return "weekly";
    case Frequency::Monthly: return "monthly";
    case Frequency::Quarterly: return "quarterly";
  }
  return "?";
}

// One dated observation; absent value = missing, kept in place.
struct SeriesPoint {
  Date date;
  std::optional<double> value;
  // Directional counts behind an aggregated value, zero elsewhere.
  int n_inc = 0;
  int n_dec = 0;
  int n_unc = 0;
};

struct AggregationMeta {
  std::string method;  // "balance", "window", "ewma", "standardize", ...
  int window_months = 0;
  double lambda = 0.0;
  int min_count = 0;
};

struct ExpectationSeries {
  std::string series_id;
  Frequency frequency = Frequency::Monthly;
  std::vector<SeriesPoint> observations;  // dates strictly increasing
  AggregationMeta meta;
};

// Plain dated series used for benchmarks and predictors.
struct TimeSeries {
  std::string id;
  Frequency frequency = Frequency::Monthly;
  std::vector<SeriesPoint> observations;
};

inline void sort_points(std::vector<SeriesPoint>& pts) {
  std::sort(pts.begin(), pts.end(),
            [](const SeriesPoint& a, const SeriesPoint& b) {
              return a.date < b.date;
            });
}

inline void check_strictly_increasing(const std::vector<SeriesPoint>& pts,
                                      const std::string& what) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i - 1].date < pts[i].date))
      throw std::invalid_argument(what + ": dates not strictly increasing at " +
                                  to_string(pts[i].date));
}

// Overlap of two dated series on exactly matching dates, missing dropped.
inline std::pair<std::vector<double>, std::vector<double>> align(
    const std::vector<SeriesPoint>& a, const std::vector<SeriesPoint>& b) {
  std::vector<double> va, vb;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].date < b[j].date) {
      ++i;
    } else if (b[j].date < a[i].date) {
      ++j;
    } else {
      if (a[i].value && b[j].value) {
        va.push_back(*a[i].value);
        vb.push_back(*b[j].value);
      }
      ++i;
      ++j;
    }
  }
  return {std::move(va), std::move(vb)};
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample (n-1) standard deviation.
inline double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need >= 2 paired observations");
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0)
    throw std::invalid_argument("pearson: constant input");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace gptsurvey
