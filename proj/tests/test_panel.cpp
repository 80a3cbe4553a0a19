#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "mobfair/error.hpp"
#include "mobfair/panel.hpp"
#include "support/error_code.hpp"

using namespace mobfair;

namespace {

using testing_support::code_of;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST(Date, RoundTripAndCalendarLabels) {
  const auto d = parse_date("2020-04-15");
  EXPECT_EQ(format_date(d), "2020-04-15");
  EXPECT_EQ(year_of(d), 2020);
  EXPECT_EQ(month_of(d), 4u);
  EXPECT_EQ(month_label(d), "2020-04");
  EXPECT_EQ(iso_week_label(d), "2020-W16");
  EXPECT_EQ(format_date(iso_week_start(d)), "2020-04-13");
  // 2021-01-01 is a Friday in ISO week 53 of 2020.
  EXPECT_EQ(iso_week_label(parse_date("2021-01-01")), "2020-W53");
  EXPECT_EQ(parse_date("2020-03-01") - parse_date("2020-02-28"), 2);
  EXPECT_EQ(code_of([] { parse_date("2020-13-01"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_date("20200101"); }), ErrorCode::InvalidArgument);
}

TEST(Date, MonthRange) {
  const auto r = month_range(2020, 2);
  EXPECT_EQ(r.length(), 29);
  EXPECT_TRUE(r.contains(parse_date("2020-02-29")));
  EXPECT_FALSE(r.contains(parse_date("2020-03-01")));
}

TEST(DeriveIncident, FirstDayMaskedThenDifferences) {
  CaseSeries s{{"A"}, parse_date("2020-03-01"), {0, 0, 3, 7}};
  const auto inc = derive_incident(s);
  ASSERT_EQ(inc.size(), 4u);
  EXPECT_FALSE(inc[0].has_value());
  EXPECT_EQ(*inc[1], 0);
  EXPECT_EQ(*inc[2], 3);
  EXPECT_EQ(*inc[3], 4);
}

TEST(DeriveIncident, ConstantSeriesGivesZeros) {
  CaseSeries s{{"A"}, parse_date("2020-03-01"), {5, 5, 5}};
  const auto inc = derive_incident(s);
  EXPECT_EQ(*inc[1], 0);
  EXPECT_EQ(*inc[2], 0);
}

TEST(DeriveIncident, DecreaseNamesUnitAndDate) {
  CaseSeries s{{"36061"}, parse_date("2020-03-01"), {10, 9}};
  try {
    derive_incident(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DecreasingCumulative);
    EXPECT_NE(std::string(e.what()).find("36061"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2020-03-02"), std::string::npos);
  }
}

TEST(NormalizeMobility, DividesByBaselineMean) {
  const auto first = parse_date("2020-02-01");
  std::vector<double> trips{100, 100, 100, 50, 150};
  const auto c = normalize_mobility(trips, first, {first, first + 2});
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[3], 0.5);
  EXPECT_DOUBLE_EQ(c[4], 1.5);
}

TEST(NormalizeMobility, Errors) {
  const auto first = parse_date("2020-02-01");
  std::vector<double> zeros{0, 0, 0, 1};
  EXPECT_EQ(code_of([&] { normalize_mobility(zeros, first, {first, first + 2}); }),
            ErrorCode::ZeroBaseline);
  std::vector<double> ok{1, 2, 3};
  EXPECT_EQ(code_of([&] { normalize_mobility(ok, first, {first - 1, first + 1}); }),
            ErrorCode::WindowOutOfRange);
  std::vector<double> gap{1, kNaN, 3};
  EXPECT_EQ(code_of([&] { normalize_mobility(gap, first, {first, first + 2}); }),
            ErrorCode::GapInSeries);
}

TEST(NormalizeMobility, ScaleInvariant) {
  const auto first = parse_date("2020-02-01");
  std::vector<double> trips{3, 4, 5, 2, 9, 1};
  std::vector<double> scaled;
  for (double v : trips) scaled.push_back(7.5 * v);
  const auto a = normalize_mobility(trips, first, {first, first + 2});
  const auto b = normalize_mobility(scaled, first, {first, first + 2});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(LagWindowAverage, Examples) {
  std::vector<double> ramp;
  for (int i = 1; i <= 21; ++i) ramp.push_back(i);
  // Days t-7..t-1 of a ramp ending at index 21 -> values 15..21.
  ramp.push_back(0.0);
  EXPECT_DOUBLE_EQ(lag_window_average(ramp, 21, 1, 7), 18.0);
  std::vector<double> days;
  for (int i = 1; i <= 30; ++i) days.push_back(i);
  EXPECT_DOUBLE_EQ(lag_window_average(days, 29, 1, 7), 26.0);
  std::vector<double> flat(30, 0.8);
  EXPECT_DOUBLE_EQ(lag_window_average(flat, 29, 8, 14), 0.8);
  EXPECT_EQ(code_of([&] { lag_window_average(flat, 10, 15, 21); }),
            ErrorCode::InsufficientHistory);
  EXPECT_EQ(code_of([&] { lag_window_average(flat, 29, 7, 1); }), ErrorCode::InvalidArgument);
}

namespace {

std::map<UnitId, DemographicRecord> demo_for(std::initializer_list<const char*> ids) {
  std::map<UnitId, DemographicRecord> out;
  for (const char* id : ids) {
    DemographicRecord r;
    r.unit = {id};
    r.population = 1000;
    out[r.unit] = r;
  }
  return out;
}

MobilitySeries mob(const char* id, DateIndex first, std::vector<double> trips) {
  MobilitySeries m{{id}, first, trips, {}};
  return normalized(std::move(m), {first, first + 1});
}

}  // namespace

TEST(BuildPanel, IntersectsUnitsAndClipsToCommonSpan) {
  const auto d0 = parse_date("2020-03-01");
  std::map<UnitId, CaseSeries> cases{
      {{"A"}, {{"A"}, d0, {1, 2, 3, 4, 5}}},
      {{"B"}, {{"B"}, d0, {1, 1, 2, 2, 3}}},
      {{"C"}, {{"C"}, d0, {1, 1, 1, 1, 1}}},
  };
  std::map<UnitId, MobilitySeries> mobility{
      {{"A"}, mob("A", d0 - 1, {2, 2, 1, 1, 1, 1})},
      {{"B"}, mob("B", d0 - 1, {4, 4, 2, 2, 2, 2})},
  };
  BuildReport report;
  const auto panel = build_panel(cases, mobility, demo_for({"A", "B", "D"}), &report);
  EXPECT_EQ(panel.size(), 2u);
  EXPECT_EQ(report.units_dropped, 2u);
  EXPECT_EQ(panel.date_span().first, d0);
  EXPECT_EQ(panel.date_span().last, d0 + 4);
  EXPECT_EQ(panel.unit(0).id.value, "A");
  EXPECT_EQ(panel.unit(0).cumulative.size(), 5u);
  EXPECT_DOUBLE_EQ(panel.unit(0).change[0], 1.0);
  EXPECT_DOUBLE_EQ(panel.unit(0).change[1], 0.5);
  EXPECT_EQ(panel.incident(0, 2), 1);
  ASSERT_TRUE(panel.find({"B"}).has_value());
  EXPECT_FALSE(panel.find({"C"}).has_value());
}

TEST(BuildPanel, EmptyIntersection) {
  const auto d0 = parse_date("2020-03-01");
  std::map<UnitId, CaseSeries> cases{{{"A"}, {{"A"}, d0, {1, 2}}}};
  std::map<UnitId, MobilitySeries> mobility{{{"B"}, mob("B", d0, {1, 1})}};
  EXPECT_EQ(code_of([&] { build_panel(cases, mobility, demo_for({"A", "B"})); }),
            ErrorCode::EmptyPanel);
}

TEST(BuildPanel, GapInsideSpanRejected) {
  const auto d0 = parse_date("2020-03-01");
  std::map<UnitId, CaseSeries> cases{{{"A"}, {{"A"}, d0, {1, 2, 3}}}};
  MobilitySeries m{{"A"}, d0, {1, 1, kNaN}, {}};
  std::map<UnitId, MobilitySeries> mobility{{{"A"}, normalized(m, {d0, d0 + 1})}};
  EXPECT_EQ(code_of([&] { build_panel(cases, mobility, demo_for({"A"})); }),
            ErrorCode::GapInSeries);
}

TEST(Covariates, LookupIncludesExtras) {
  DemographicRecord r;
  r.income = 50000;
  r.nchs = 3;
  r.extra["placebo"] = 0.25;
  EXPECT_EQ(standard_covariates().size(), 6u);
  EXPECT_DOUBLE_EQ(*covariate_value(r, "income"), 50000);
  EXPECT_DOUBLE_EQ(*covariate_value(r, "nchs"), 3);
  EXPECT_DOUBLE_EQ(*covariate_value(r, "placebo"), 0.25);
  EXPECT_FALSE(covariate_value(r, "unknown").has_value());
}
