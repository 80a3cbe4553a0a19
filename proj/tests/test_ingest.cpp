#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "mobfair/ingest.hpp"
#include "support/error_code.hpp"
#include "support/temp_dir.hpp"

using namespace mobfair;
using namespace mobfair::ingest;
using testing_support::code_of;
using testing_support::TempDir;

TEST(ParseCases, WellFormed) {
  TempDir dir;
  const auto p = dir.write("cases.csv",
                           "unit_id,2020-03-01,2020-03-02,2020-03-03,2020-03-04,2020-03-05\n"
                           "A,0,1,1,4,9\n"
                           "B,2,2,3,3,3\n");
  const auto parsed = parse_cases(p);
  ASSERT_EQ(parsed.series.size(), 2u);
  EXPECT_EQ(parsed.report.rows_rejected, 0u);
  const auto& a = parsed.series.at({"A"});
  EXPECT_EQ(a.first, parse_date("2020-03-01"));
  EXPECT_EQ(a.cumulative, (std::vector<std::int64_t>{0, 1, 1, 4, 9}));
}

TEST(ParseCases, NonIntegerNamesUnitAndDate) {
  TempDir dir;
  const auto p = dir.write("cases.csv", "unit_id,2020-03-01,2020-03-02\nA,1,abc\n");
  try {
    parse_cases(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonIntegerCount);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("A"), std::string::npos);
    EXPECT_NE(msg.find("2020-03-02"), std::string::npos);
  }
}

TEST(ParseCases, DuplicateRowRejected) {
  TempDir dir;
  const auto p = dir.write("cases.csv", "unit_id,2020-03-01,2020-03-02\nA,1,2\nA,5,6\n");
  const auto parsed = parse_cases(p);
  EXPECT_EQ(parsed.series.size(), 1u);
  EXPECT_EQ(parsed.report.rows_rejected, 1u);
  EXPECT_EQ(parsed.series.at({"A"}).cumulative[1], 2);
  ASSERT_EQ(parsed.report.messages.size(), 1u);
  EXPECT_NE(parsed.report.messages[0].second.find("duplicate"), std::string::npos);
}

TEST(ParseCases, HeaderAndMonotonicity) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { parse_cases(dir.write("a.csv", "fips,2020-03-01\nA,1\n")); }),
            ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { parse_cases(dir.write("b.csv", "unit_id,2020-03-01,2020-03-03\n")); }),
            ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { parse_cases(dir.write("c.csv", "unit_id,2020-03-01,2020-03-02\nA,3,2\n")); }),
            ErrorCode::DecreasingCumulative);
  EXPECT_EQ(code_of([&] { parse_cases(dir.path() / "missing.csv"); }), ErrorCode::IoFailure);
}

TEST(ParseMobility, OdSumsOverDestinations) {
  TempDir dir;
  const auto p = dir.write("od.csv",
                           "origin,destination,date,trips\n"
                           "A,B,2020-02-01,10\n"
                           "A,C,2020-02-01,5\n"
                           "A,A,2020-02-01,2\n"
                           "B,A,2020-02-01,7\n");
  const auto with_loops = parse_mobility(p, {MobilitySchema::Od, true});
  EXPECT_DOUBLE_EQ(with_loops.series.at({"A"}).trips[0], 17.0);
  EXPECT_DOUBLE_EQ(with_loops.series.at({"B"}).trips[0], 7.0);
  const auto no_loops = parse_mobility(p, {MobilitySchema::Od, false});
  EXPECT_DOUBLE_EQ(no_loops.series.at({"A"}).trips[0], 15.0);
}

TEST(ParseMobility, AggregatedPassthroughAndGaps) {
  TempDir dir;
  const auto p = dir.write("agg.csv",
                           "unit_id,date,trips\n"
                           "A,2020-02-01,100\n"
                           "A,2020-02-03,80\n");
  const auto parsed = parse_mobility(p);
  const auto& a = parsed.series.at({"A"});
  ASSERT_EQ(a.trips.size(), 3u);
  EXPECT_DOUBLE_EQ(a.trips[0], 100.0);
  EXPECT_TRUE(std::isnan(a.trips[1]));
  EXPECT_DOUBLE_EQ(a.trips[2], 80.0);
}

TEST(ParseMobility, Errors) {
  TempDir dir;
  const auto neg = dir.write("neg.csv", "unit_id,date,trips\nA,2020-02-01,-1\n");
  EXPECT_EQ(code_of([&] { parse_mobility(neg); }), ErrorCode::NegativeTrips);
  EXPECT_EQ(code_of([&] { parse_schema("matrix"); }), ErrorCode::UnknownSchema);
  EXPECT_EQ(parse_schema("od"), MobilitySchema::Od);
  // An aggregated file read as od.
  EXPECT_EQ(code_of([&] { parse_mobility(neg, {MobilitySchema::Od, true}); }),
            ErrorCode::UnknownSchema);
}

namespace {

const char* kDemoHeader = "unit_id,income,smartphone_pct,population,education_pct,nchs,median_age";

}  // namespace

TEST(ParseDemographics, PercentToFractionAndExtras) {
  TempDir dir;
  const auto p = dir.write("demo.csv", std::string(kDemoHeader) +
                                           ",placebo\n"
                                           "A,52000,85,12000,31.5,6,44.5,0.25\n"
                                           "B,61000,0.9,90000,0.4,1,38,-1\n");
  const auto parsed = parse_demographics(p);
  const auto& a = parsed.series.at({"A"});
  EXPECT_DOUBLE_EQ(a.smartphone_pct, 0.85);
  EXPECT_DOUBLE_EQ(a.education_pct, 0.315);
  EXPECT_EQ(a.nchs, 6);
  EXPECT_DOUBLE_EQ(a.extra.at("placebo"), 0.25);
  EXPECT_DOUBLE_EQ(parsed.series.at({"B"}).smartphone_pct, 0.9);
}

TEST(ParseDemographics, Errors) {
  TempDir dir;
  const std::string h = std::string(kDemoHeader) + "\n";
  EXPECT_EQ(code_of([&] { parse_demographics(dir.write("a.csv", h + "A,1,80,100,30,7,40\n")); }),
            ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([&] { parse_demographics(dir.write("b.csv", h + "A,1,80,-5,30,2,40\n")); }),
            ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([&] {
              parse_demographics(dir.write("c.csv", "unit_id,income,population\nA,1,2\n"));
            }),
            ErrorCode::MissingColumn);
}

TEST(Writers, RoundTrip) {
  TempDir dir;
  std::map<UnitId, CaseSeries> cases{{{"A"}, {{"A"}, parse_date("2020-02-01"), {1, 2, 5}}}};
  std::map<UnitId, MobilitySeries> mobility{
      {{"A"}, {{"A"}, parse_date("2020-02-01"), {100.5, 90.25, 80.125}, {}}}};
  DemographicRecord rec;
  rec.unit = {"A"};
  rec.income = 40000;
  rec.smartphone_pct = 0.7;
  rec.population = 2500;
  rec.education_pct = 0.2;
  rec.nchs = 4;
  rec.median_age = 45.25;
  rec.extra["placebo"] = -0.5;
  std::map<UnitId, DemographicRecord> demo{{rec.unit, rec}};

  write_cases(dir.path() / "cases.csv", cases);
  write_mobility_aggregated(dir.path() / "mobility.csv", mobility);
  write_demographics(dir.path() / "demographics.csv", demo);

  EXPECT_EQ(parse_cases(dir.path() / "cases.csv").series.at({"A"}).cumulative,
            cases.at({"A"}).cumulative);
  EXPECT_EQ(parse_mobility(dir.path() / "mobility.csv").series.at({"A"}).trips,
            mobility.at({"A"}).trips);
  const auto back = parse_demographics(dir.path() / "demographics.csv").series.at({"A"});
  EXPECT_DOUBLE_EQ(back.smartphone_pct, 0.7);
  EXPECT_DOUBLE_EQ(back.median_age, 45.25);
  EXPECT_EQ(back.nchs, 4);
  EXPECT_DOUBLE_EQ(back.extra.at("placebo"), -0.5);
}
