#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "gptsurvey/aggregation.hpp"

using namespace gptsurvey;

namespace {

std::vector<DatedDirection> responses(Date d, int inc, int dec, int unc) {
  std::vector<DatedDirection> out;
  for (int i = 0; i < inc; ++i) out.push_back({d, Direction::Increase});
  for (int i = 0; i < dec; ++i) out.push_back({d, Direction::Decrease});
  for (int i = 0; i < unc; ++i) out.push_back({d, Direction::Uncertain});
  return out;
}

void append(std::vector<DatedDirection>& to, std::vector<DatedDirection> from) {
  to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

TEST_CASE("balance statistic basics") {
  CHECK(*balance_statistic({3, 1, 6}) == Catch::Approx(0.5));
  CHECK_FALSE(balance_statistic({0, 0, 10}).has_value());
  CHECK_FALSE(balance_statistic({4, 4, 0}, 10).has_value());  // below min_count
  CHECK(*balance_statistic({10, 0, 0}) == 1.0);
  CHECK(*balance_statistic({0, 7, 3}) == -1.0);
}

TEST_CASE("balance reproduces the published full-sample proportions") {
  // Reported percentages scaled by 100 into integer response counts.
  struct Row {
    const char* id;
    double inc, dec;
  };
  const Row rows[] = {
      {"SNP", 15.13, 26.84}, {"CPI", 7.86, 6.45},   {"HS", 2.50, 5.68},
      {"IP", 10.11, 11.72},  {"DEFL", 9.63, 12.50}, {"AAA", 11.09, 14.88},
      {"C", 11.53, 17.67},   {"GF", 9.86, 10.88},   {"GY", 20.54, 20.91},
      {"NRI", 17.46, 22.94}, {"RI", 8.66, 16.49},   {"GS", 13.44, 17.30},
      {"3TB", 15.45, 11.21}, {"UE", 9.81, 11.24},
  };
  for (const auto& r : rows) {
    INFO(r.id);
    DirectionCounts c{static_cast<int>(std::lround(r.inc * 100)),
                      static_cast<int>(std::lround(r.dec * 100)), 0};
    const double expected = (r.inc - r.dec) / (r.inc + r.dec);
    CHECK(*balance_statistic(c) == Catch::Approx(expected).margin(1e-12));
  }
  // Spot value: SNP row.
  DirectionCounts snp{1513, 2684, 5802};
  CHECK(*balance_statistic(snp) == Catch::Approx(-0.27901).margin(5e-6));
}

TEST_CASE("balance is permutation-invariant and bounded") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto rs = responses({2001, 5, 7}, static_cast<int>(rng() % 20),
                        static_cast<int>(rng() % 20),
                        static_cast<int>(rng() % 20));
    DirectionCounts c;
    for (const auto& r : rs) c.add(r.direction);
    auto v = balance_statistic(c);
    if (!v) continue;
    CHECK(*v >= -1.0);
    CHECK(*v <= 1.0);
    std::shuffle(rs.begin(), rs.end(), rng);
    DirectionCounts c2;
    for (const auto& r : rs) c2.add(r.direction);
    CHECK(*balance_statistic(c2) == *v);
  }
}

TEST_CASE("single-window monthly aggregate") {
  auto rs = responses({1999, 4, 12}, 30, 10, 5);
  auto s = window_aggregate(rs, 1, Frequency::Monthly);
  REQUIRE(s.observations.size() == 1);
  CHECK(s.observations[0].date == Date{1999, 4, 1});
  CHECK(*s.observations[0].value == Catch::Approx(0.5));
  CHECK(s.observations[0].n_inc == 30);
  CHECK(s.observations[0].n_unc == 5);
}

TEST_CASE("three-month window pools responses, not monthly balances") {
  // Month 1: 10 Inc / 0 Dec (balance 1.0); months 2-3: 10 Inc / 30 Dec
  // each (balance -0.5). Pooled: (30-60)/90 = -1/3; averaged: -1/3 of
  // (1.0 - 0.5 - 0.5) = 0. The two conventions differ here.
  std::vector<DatedDirection> rs;
  append(rs, responses({1999, 1, 5}, 10, 0, 0));
  append(rs, responses({1999, 2, 5}, 10, 30, 0));
  append(rs, responses({1999, 3, 5}, 10, 30, 0));
  auto s = window_aggregate(rs, 3, Frequency::Monthly);
  const auto& march = s.observations.back();
  REQUIRE(march.date == Date{1999, 3, 1});
  CHECK(*march.value == Catch::Approx(-1.0 / 3.0));
  const double averaged = (1.0 - 0.5 - 0.5) / 3.0;
  CHECK(*march.value != Catch::Approx(averaged).margin(1e-6));
}

TEST_CASE("window=1 monthly equals the month's own balance") {
  std::mt19937_64 rng(9);
  std::vector<DatedDirection> rs;
  std::map<int, DirectionCounts> expect;
  for (int m = 0; m < 12; ++m) {
    Date d{2005, 1 + m, 10};
    const int inc = 5 + static_cast<int>(rng() % 30);
    const int dec = 5 + static_cast<int>(rng() % 30);
    append(rs, responses(d, inc, dec, 3));
    DirectionCounts c{inc, dec, 3};
    expect[month_key(d)] = c;
  }
  auto s = window_aggregate(rs, 1, Frequency::Monthly);
  for (const auto& p : s.observations) {
    const auto& c = expect.at(month_key(p.date));
    CHECK(*p.value == *balance_statistic(c));
  }
}

TEST_CASE("quarterly aggregate pools the prior quarter") {
  // All responses in 1999Q1; the 1999Q2 point must carry them.
  std::vector<DatedDirection> rs;
  append(rs, responses({1999, 1, 11}, 20, 0, 0));
  append(rs, responses({1999, 2, 11}, 0, 10, 0));
  append(rs, responses({1999, 3, 11}, 10, 0, 0));
  auto s = window_aggregate(rs, 1, Frequency::Quarterly);
  auto q2 = std::find_if(s.observations.begin(), s.observations.end(),
                         [](const SeriesPoint& p) {
                           return p.date == Date{1999, 4, 1};
                         });
  REQUIRE(q2 != s.observations.end());
  CHECK(*q2->value == Catch::Approx((30.0 - 10.0) / 40.0));
}

TEST_CASE("ewma of a constant series is the constant, any lambda") {
  std::vector<DatedDirection> rs;
  for (int i = 0; i < 30; ++i)
    append(rs, responses({2010, 1, 1 + i}, 7, 3, 0));  // balance 0.4 daily
  auto daily = window_aggregate(rs, 1, Frequency::Daily, 0);
  for (double lambda : {0.1, 0.5, 0.9, 0.99}) {
    auto s = ewma_aggregate(daily, lambda);
    for (const auto& p : s.observations)
      CHECK(*p.value == Catch::Approx(0.4).margin(1e-12));
  }
}

TEST_CASE("lambda near zero collapses to today's balance") {
  std::vector<DatedDirection> rs;
  append(rs, responses({2010, 1, 1}, 10, 0, 0));   // 1.0
  append(rs, responses({2010, 1, 2}, 0, 10, 0));   // -1.0
  auto daily = window_aggregate(rs, 1, Frequency::Daily, 0);
  auto s = ewma_aggregate(daily, 1e-9);
  CHECK(*s.observations[1].value == Catch::Approx(-1.0).margin(1e-8));
}

TEST_CASE("impulse response matches the direct weighted sum") {
  // Day 0 balance 1, then 0 for 30 days.
  std::vector<DatedDirection> rs;
  append(rs, responses({2010, 1, 1}, 10, 0, 0));
  for (int i = 1; i <= 30; ++i)
    append(rs, responses({2010, 1, 1 + i}, 5, 5, 0));
  auto daily = window_aggregate(rs, 1, Frequency::Daily, 0);
  const double lambda = 0.9;
  auto s = ewma_aggregate(daily, lambda);
  for (int t = 0; t <= 30; ++t) {
    double num = 0, den = 0;
    for (int k = 0; k <= t; ++k) {
      const double b = (t - k == 0 && t == 0) ? 1.0 : (k == 0 ? 1.0 : 0.0);
      // b_{day k}: day 0 has balance 1, later days 0.
      num += std::pow(lambda, t - k) * (k == 0 ? 1.0 : 0.0);
      den += std::pow(lambda, t - k);
      (void)b;
    }
    CHECK(*s.observations[t].value == Catch::Approx(num / den).margin(1e-10));
  }
}

TEST_CASE("ewma is linear in the daily series") {
  std::mt19937_64 rng(21);
  ExpectationSeries daily;
  daily.frequency = Frequency::Daily;
  for (int i = 0; i < 60; ++i) {
    std::optional<double> v;
    if (rng() % 4 != 0)
      v = std::uniform_real_distribution<double>(-1, 1)(rng);
    daily.observations.push_back({from_days(to_days({2015, 3, 1}) + i), v});
  }
  ExpectationSeries scaled = daily;
  for (auto& p : scaled.observations)
    if (p.value) p.value = 3.0 * *p.value;
  auto a = ewma_aggregate(daily, 0.93);
  auto b = ewma_aggregate(scaled, 0.93);
  for (std::size_t i = 0; i < a.observations.size(); ++i) {
    if (!a.observations[i].value) continue;
    CHECK(*b.observations[i].value ==
          Catch::Approx(3.0 * *a.observations[i].value).margin(1e-12));
  }
}

TEST_CASE("optimize_lambda recovers a planted optimum") {
  std::mt19937_64 rng(33);
  ExpectationSeries daily;
  daily.frequency = Frequency::Daily;
  for (int i = 0; i < 400; ++i)
    daily.observations.push_back(
        {from_days(to_days({2000, 1, 1}) + i),
         std::uniform_real_distribution<double>(-1, 1)(rng)});
  auto planted = ewma_aggregate(daily, 0.95);
  TimeSeries target;
  for (int i = 30; i < 400; i += 7)
    target.observations.push_back(planted.observations[i]);
  auto result = optimize_lambda(daily, target);
  CHECK(result.lambda_star == Catch::Approx(0.95).margin(1e-9));
  CHECK(result.correlation_at_star == Catch::Approx(1.0).margin(1e-9));
  CHECK(result.grid.size() == 200);
  for (const auto& [l, c] : result.grid)
    CHECK(c <= result.correlation_at_star);
}

TEST_CASE("optimize_lambda rejects constant targets and thin overlaps") {
  ExpectationSeries daily;
  daily.frequency = Frequency::Daily;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i)
    daily.observations.push_back(
        {from_days(to_days({2000, 1, 1}) + i),
         std::uniform_real_distribution<double>(-1, 1)(rng)});
  TimeSeries constant;
  for (int i = 0; i < 50; ++i)
    constant.observations.push_back(
        {from_days(to_days({2000, 1, 10}) + i), 1.0});
  CHECK_THROWS(optimize_lambda(daily, constant));

  TimeSeries thin;
  for (int i = 0; i < 10; ++i)
    thin.observations.push_back(
        {from_days(to_days({2000, 1, 10}) + i), static_cast<double>(i)});
  CHECK_THROWS_AS(optimize_lambda(daily, thin), std::invalid_argument);
}

TEST_CASE("standardize: hand-checked values, idempotence, zero variance") {
  ExpectationSeries s;
  s.observations = {{{2000, 1, 1}, 1.0}, {{2000, 2, 1}, 3.0}};
  auto z = standardize(s);
  CHECK(*z.observations[0].value ==
        Catch::Approx(-1.0 / std::sqrt(2.0)).margin(1e-12));
  CHECK(*z.observations[1].value ==
        Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));

  auto zz = standardize(z);
  for (std::size_t i = 0; i < z.observations.size(); ++i)
    CHECK(*zz.observations[i].value ==
          Catch::Approx(*z.observations[i].value).margin(1e-12));

  ExpectationSeries c;
  c.observations = {{{2000, 1, 1}, 2.0}, {{2000, 2, 1}, 2.0}};
  CHECK_THROWS_AS(standardize(c), std::invalid_argument);
}

TEST_CASE("standardize keeps missing observations missing") {
  ExpectationSeries s;
  s.observations = {{{2000, 1, 1}, 1.0},
                    {{2000, 2, 1}, std::nullopt},
                    {{2000, 3, 1}, 3.0}};
  auto z = standardize(s);
  CHECK_FALSE(z.observations[1].value.has_value());
}

TEST_CASE("pearson correlation is standardization-invariant") {
  std::mt19937_64 rng(8);
  std::vector<double> a, b;
  for (int i = 0; i < 80; ++i) {
    a.push_back(std::normal_distribution<double>(0, 1)(rng));
    b.push_back(0.5 * a.back() + std::normal_distribution<double>(0, 1)(rng));
  }
  std::vector<double> za = a, zb = b;
  const double ma = mean(a), sa = stddev(a);
  for (auto& x : za) x = (x - ma) / sa;
  CHECK(pearson(a, b) == Catch::Approx(pearson(za, b)).margin(1e-12));
  CHECK(pearson(a, b) == Catch::Approx(pearson(za, zb)).margin(1e-12));
}
