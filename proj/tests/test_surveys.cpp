#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gptsurvey/surveys.hpp"

using namespace gptsurvey;

namespace {

csv::Table table_from(const std::string& text) {
  std::istringstream in(text);
  return csv::read(in);
}

}  // namespace

TEST_CASE("AAII weekly spread and monthly mean") {
  auto t = table_from(
      "date,bullish,bearish,neutral\n"
      "1995-06-01,40,30,30\n"
      "1995-06-08,50,30,20\n"
      "1995-06-15,60,30,10\n"
      "1995-06-22,70,30,0\n"
      "1995-07-06,45,45,10\n");
  auto aaii = load_aaii(t);
  REQUIRE(aaii.weekly.observations.size() == 5);
  CHECK(*aaii.weekly.observations[0].value == Catch::Approx(0.10));
  REQUIRE(aaii.monthly.observations.size() == 2);
  // June weeks: 0.1, 0.2, 0.3, 0.4 -> 0.25
  CHECK(aaii.monthly.observations[0].date == Date{1995, 6, 1});
  CHECK(*aaii.monthly.observations[0].value == Catch::Approx(0.25));
  CHECK(*aaii.monthly.observations[1].value == Catch::Approx(0.0));
}

TEST_CASE("AAII rows not summing to ~100 are rejected with a warning") {
  auto t = table_from(
      "date,bullish,bearish,neutral\n"
      "1995-06-01,40,30,10\n"
      "1995-06-08,40,30,30.5\n");
  auto aaii = load_aaii(t);
  REQUIRE(aaii.weekly.observations.size() == 1);  // 100.5 passes the +-1 band
  REQUIRE(aaii.warnings.size() == 1);
  CHECK(aaii.warnings[0].find("line 2") != std::string::npos);
}

TEST_CASE("AAII loader date window") {
  auto t = table_from(
      "date,bullish,bearish,neutral\n"
      "2021-09-02,40,30,30\n"
      "2021-08-26,40,30,30\n"
      "2023-03-02,40,30,30\n");
  auto aaii = load_aaii(t, Date{2021, 9, 1}, Date{2023, 3, 31});
  CHECK(aaii.weekly.observations.size() == 2);
}

TEST_CASE("SPF fixed-target revision arithmetic") {
  // Target 2000Q3: F at 2000Q2 (h=1) = 2.0, F at 2000Q1 (h=2) = 1.5.
  auto t = table_from(
      "series,date,horizon,forecast\n"
      "CPI,2000-01-01,2,1.5\n"
      "CPI,2000-04-01,1,2.0\n");
  auto spf = load_spf(t);
  const SpfObservation* h1 = nullptr;
  for (const auto& o : spf.panel.observations)
    if (o.horizon == 1) h1 = &o;
  REQUIRE(h1 != nullptr);
  CHECK(h1->target_quarter == quarter_key(Date{2000, 7, 1}));
  REQUIRE(h1->revision.has_value());
  CHECK(*h1->revision == Catch::Approx(0.5));
}

TEST_CASE("missing h+1 forecast leaves the revision missing") {
  auto t = table_from(
      "series,date,horizon,forecast\n"
      "CPI,2000-04-01,1,2.0\n");
  auto spf = load_spf(t);
  REQUIRE(spf.panel.observations.size() == 1);
  CHECK_FALSE(spf.panel.observations[0].revision.has_value());
}

TEST_CASE("fixed-target alignment holds for every computed revision") {
  std::ostringstream text;
  text << "series,date,horizon,forecast\n";
  for (int q = 0; q < 12; ++q)
    for (int h = 1; h <= 4; ++h)
      text << "RGDP," << to_string(quarter_start(quarter_key(Date{2000, 1, 1}) + q))
           << "," << h << "," << 1.0 + 0.1 * q + 0.01 * h << "\n";
  auto spf = load_spf(table_from(text.str()));
  int with_revision = 0;
  for (const auto& o : spf.panel.observations) {
    if (!o.revision) continue;
    ++with_revision;
    // The revision compares F_t(tau) at h with F_{t-1}(tau) at h+1: both
    // reference the same target quarter by construction; assert it.
    CHECK(o.target_quarter == o.survey_quarter + o.horizon);
    CHECK((o.survey_quarter - 1) + (o.horizon + 1) == o.target_quarter);
  }
  CHECK(with_revision > 0);
}

TEST_CASE("horizon average requires all four horizons") {
  auto t = table_from(
      "series,date,horizon,forecast\n"
      "CPI,2000-04-01,1,1.0\n"
      "CPI,2000-04-01,2,2.0\n"
      "CPI,2000-04-01,3,3.0\n"
      "CPI,2000-04-01,4,4.0\n"
      "CPI,2000-07-01,1,1.0\n");
  auto spf = load_spf(t);
  const auto& avg = spf.levels.at({"CPI", 0});
  REQUIRE(avg.observations.size() == 1);
  CHECK(avg.observations[0].date == Date{2000, 4, 1});
  CHECK(*avg.observations[0].value == Catch::Approx(2.5));
}

TEST_CASE("realized values attach as errors with the documented sign") {
  auto f = table_from(
      "series,date,horizon,forecast\n"
      "CPI,2000-04-01,1,2.0\n");
  auto spf = load_spf(f);
  auto r = table_from(
      "series,date,value\n"
      "CPI,2000-07-01,3.0\n");
  attach_realized(spf.panel, r);
  REQUIRE(spf.panel.observations[0].realized.has_value());
  CHECK(*spf.panel.observations[0].error == Catch::Approx(1.0));
  CHECK(spf.panel.realized_vintage == "latest");
}

TEST_CASE("perfect-foresight panel has zero errors everywhere") {
  std::ostringstream ftext, rtext;
  ftext << "series,date,horizon,forecast\n";
  rtext << "series,date,value\n";
  for (int q = 0; q < 8; ++q) {
    const int qk = quarter_key(Date{2005, 1, 1}) + q;
    for (int h = 1; h <= 4; ++h)
      ftext << "TBILL," << to_string(quarter_start(qk)) << "," << h << ","
            << 2.0 + 0.25 * (qk + h) << "\n";
    rtext << "TBILL," << to_string(quarter_start(qk)) << ","
          << 2.0 + 0.25 * qk << "\n";
  }
  // realized for targets beyond the last survey quarter
  for (int q = 8; q < 13; ++q) {
    const int qk = quarter_key(Date{2005, 1, 1}) + q;
    rtext << "TBILL," << to_string(quarter_start(qk)) << ","
          << 2.0 + 0.25 * qk << "\n";
  }
  auto spf = load_spf(table_from(ftext.str()));
  attach_realized(spf.panel, table_from(rtext.str()));
  for (const auto& o : spf.panel.observations) {
    REQUIRE(o.error.has_value());
    CHECK(*o.error == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("first-release vintage preferred when present") {
  auto f = table_from(
      "series,date,horizon,forecast\n"
      "CPI,2000-04-01,1,2.0\n");
  auto spf = load_spf(f);
  auto r = table_from(
      "series,date,value,vintage\n"
      "CPI,2000-07-01,9.0,latest\n"
      "CPI,2000-07-01,3.5,first_release\n");
  attach_realized(spf.panel, r);
  CHECK(spf.panel.realized_vintage == "first_release");
  CHECK(*spf.panel.observations[0].realized == Catch::Approx(3.5));
}

TEST_CASE("predictor table: 12-month changes") {
  std::ostringstream text;
  text << "date,const_col,linear_col\n";
  for (int m = 0; m < 30; ++m)
    text << to_string(month_start(month_key(Date{1989, 1, 1}) + m)) << ",5,"
         << m << "\n";
  auto p = load_predictors(table_from(text.str()));
  compute_changes(p, {"const_col", "linear_col"});
  const auto& dc = p.column("d_const_col");
  const auto& dl = p.column("d_linear_col");
  for (int m = 0; m < 12; ++m) {
    CHECK_FALSE(dc[m].has_value());
    CHECK_FALSE(dl[m].has_value());
  }
  for (int m = 12; m < 30; ++m) {
    CHECK(*dc[m] == 0.0);
    CHECK(*dl[m] == 12.0);
  }
  // 1990-01 change uses 1989-01 (rows 12 and 0).
  const int row_1990 = p.row_of_month(month_key(Date{1990, 1, 1}));
  REQUIRE(row_1990 == 12);
  CHECK(*dl[row_1990] == *p.column("linear_col")[12] -
                             *p.column("linear_col")[0]);
}

TEST_CASE("duplicate predictor dates are an error") {
  auto t = table_from(
      "date,x\n"
      "1990-01-31,1\n"
      "1990-01-15,2\n");
  CHECK_THROWS(load_predictors(t));
}

TEST_CASE("monthly AAII aggregate has one value per covered month") {
  std::ostringstream text;
  text << "date,bullish,bearish,neutral\n";
  for (int w = 0; w < 60; ++w)
    text << to_string(from_days(to_days({1998, 1, 1}) + 7 * w))
         << ",40,35,25\n";
  auto aaii = load_aaii(table_from(text.str()));
  std::set<int> months;
  for (const auto& p : aaii.monthly.observations)
    CHECK(months.insert(month_key(p.date)).second);
}
