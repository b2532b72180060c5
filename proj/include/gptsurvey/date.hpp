#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace gptsurvey {

// Calendar date, no time component. Proleptic Gregorian.
struct Date {
  int year = 1970;
  int month = 1;  // 1-12
  int day = 1;    // 1-31

  auto operator<=>(const Date&) const = default;
};

namespace detail {

// Days since 1970-01-01 (Howard Hinnant's civil calendar algorithm).
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
              static_cast<int>(d)};
}

}  // namespace detail

inline std::int64_t to_days(const Date& d) {
  return detail::days_from_civil(d.year, d.month, d.day);
}

inline Date from_days(std::int64_t z) { return detail::civil_from_days(z); }

// 0 = Monday ... 6 = Sunday.
inline int weekday(const Date& d) {
  const std::int64_t z = to_days(d);
  return static_cast<int>(((z % 7) + 10) % 7);
}

inline bool is_weekend(const Date& d) { return weekday(d) >= 5; }

// Months since year 0, usable as a dense month index.
inline int month_key(const Date& d) { return d.year * 12 + (d.month - 1); }

// Quarters since year 0.
inline int quarter_key(const Date& d) {
  return d.year * 4 + (d.month - 1) / 3;
}

inline Date quarter_start(int qkey) {
  return Date{qkey / 4, (qkey % 4) * 3 + 1, 1};
}

inline Date month_start(int mkey) { return Date{mkey / 12, mkey % 12 + 1, 1}; }

inline bool is_leap(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
  static constexpr int tbl[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : tbl[m - 1];
}

inline Date month_end(int mkey) {
  const int y = mkey / 12, m = mkey % 12 + 1;
  return Date{y, m, days_in_month(y, m)};
}

inline bool valid(const Date& d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= days_in_month(d.year, d.month);
}

// Strict ISO-8601 calendar date: YYYY-MM-DD.
inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  Date d;
  auto num = [&](std::string_view part, int& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc{} && p == part.data() + part.size();
  };
  if (!num(s.substr(0, 4), d.year) || !num(s.substr(5, 2), d.month) ||
      !num(s.substr(8, 2), d.day))
    return std::nullopt;
  if (!valid(d)) return std::nullopt;
  return d;
}

inline std::string to_string(const Date& d) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

inline Date parse_date_or_throw(std::string_view s) {
  auto d = parse_date(s);
  if (!d) throw std::invalid_argument("bad date: " + std::string(s));
  return *d;
}

}  // namespace gptsurvey
