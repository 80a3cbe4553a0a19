#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mobfair/fairness.hpp"
#include "support/error_code.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace mobfair;
using namespace mobfair::fairness;
using backtest::MapeEntry;
using backtest::ModelKind;
using backtest::PeriodType;
using testing_support::code_of;

TEST(AverageRanks, Examples) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 30}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(average_ranks(std::vector<double>{5, 7, 7, 9}), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_EQ(average_ranks(std::vector<double>(4, 1.0)), (std::vector<double>(4, 2.5)));
  EXPECT_EQ(code_of([] { average_ranks(std::vector<double>{1, NAN}); }), ErrorCode::NonFiniteValue);
}

TEST(Spearman, Examples) {
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
  const std::vector<double> x{0.1, 2.0, 3.5, 7.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(v) + v * v * v);
  EXPECT_DOUBLE_EQ(spearman(x, y), 1.0);
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 2, 4}, std::vector<double>{1, 3, 2, 4}), 0.9487,
              1e-4);
  EXPECT_EQ(code_of([] { spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }),
            ErrorCode::DegenerateVariable);
  EXPECT_EQ(code_of([] { spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}); }),
            ErrorCode::InvalidArgument);
}

TEST(Spearman, MatchesCountingOracleWithTies) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(25), y(25);
    for (auto& v : x) v = small(rng);
    for (auto& v : y) v = small(rng);
    EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-12);
  }
}

TEST(SpearmanPvalue, Examples) {
  EXPECT_DOUBLE_EQ(spearman_pvalue(0.0, 30), 1.0);
  const double t = 0.5 * std::sqrt(18.0 / 0.75);
  EXPECT_NEAR(t, 2.449, 1e-3);
  const double expected = 2.0 * (1.0 - oracle::t_cdf(t, 18));
  EXPECT_NEAR(spearman_pvalue(0.5, 20), expected, 1e-8);
  EXPECT_NEAR(spearman_pvalue(0.5, 20), 0.0249, 5e-3);
  EXPECT_NEAR(spearman_pvalue(-0.5, 20), spearman_pvalue(0.5, 20), 1e-15);
  EXPECT_LT(spearman_pvalue(-0.13, 3000), 0.001);
  EXPECT_EQ(spearman_pvalue(1.0, 10), 0.0);
}

TEST(SpearmanPvalue, PermutationAgreesRoughly) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  std::vector<double> x(40), y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = n01(rng);
    y[i] = 0.4 * x[i] + n01(rng);
  }
  const double rho = spearman(x, y);
  const double perm = spearman_permutation_pvalue(x, y, 4000, 9);
  EXPECT_NEAR(perm, spearman_pvalue(rho, 40), 0.02);
  EXPECT_EQ(perm, spearman_permutation_pvalue(x, y, 4000, 9));
}

TEST(Stars, Thresholds) {
  EXPECT_EQ(stars_for(0.0005), "***");
  EXPECT_EQ(stars_for(0.005), "**");
  EXPECT_EQ(stars_for(0.03), "*");
  EXPECT_EQ(stars_for(0.2), "");
}

namespace {

struct Fixture {
  Demographics demo;
  std::vector<MapeEntry> mape;
};

MapeEntry entry(const std::string& unit, PeriodType type, DateIndex start, double value) {
  MapeEntry m;
  m.model = ModelKind::LinReg;
  m.unit = {unit};
  m.horizon = 1;
  m.period_type = type;
  m.period_start = start;
  m.period = type == PeriodType::Week ? iso_week_label(start) : month_label(start);
  m.mape = value;
  m.n_obs = 7;
  return m;
}

// Units whose error falls with their income; week 3 has too few units and
// week 4 has identical errors everywhere.
Fixture fixture() {
  Fixture f;
  const auto w1 = parse_date("2020-04-06");
  for (int i = 0; i < 20; ++i) {
    const std::string id = "U" + std::to_string(100 + i);
    DemographicRecord r;
    r.unit = {id};
    r.income = 30000 + 1000 * i;
    r.smartphone_pct = 0.5 + 0.01 * i;
    r.population = 1000 + 10 * (i % 7);
    r.nchs = 1 + i % 6;
    r.median_age = 40;
    r.extra["placebo"] = (i * 7919) % 20;
    f.demo[r.unit] = r;
    f.mape.push_back(entry(id, PeriodType::Week, w1, 50.0 - i));
    f.mape.push_back(entry(id, PeriodType::Week, w1 + 7, 30.0 - i + (i % 2)));
    if (i < 5) f.mape.push_back(entry(id, PeriodType::Week, w1 + 14, 10.0 + i));
    f.mape.push_back(entry(id, PeriodType::Week, w1 + 21, 12.5));
    f.mape.push_back(entry(id, PeriodType::Month, parse_date("2020-04-01"), 40.0 - i));
  }
  // A unit without demographics is ignored.
  f.mape.push_back(entry("X", PeriodType::Week, w1, 1.0));
  return f;
}

}  // namespace

TEST(WeeklyCorrelation, SkipsThinAndDegenerateWeeks) {
  const auto f = fixture();
  const auto series = weekly_correlation_series(f.mape, f.demo, "income", ModelKind::LinReg, 1);
  ASSERT_EQ(series.size(), 2u);
  EXPECT_EQ(series[0].period, "2020-W15");
  EXPECT_DOUBLE_EQ(series[0].rho, -1.0);
  EXPECT_EQ(series[0].n, 20);
  EXPECT_LT(series[1].rho, -0.9);
  EXPECT_EQ(series[1].covariate, "income");

  AuditConfig loose;
  loose.min_n = 5;
  EXPECT_EQ(weekly_correlation_series(f.mape, f.demo, "income", ModelKind::LinReg, 1, loose).size(),
            3u);
  EXPECT_TRUE(weekly_correlation_series(f.mape, f.demo, "income", ModelKind::Arimax, 1).empty());
  // Constant covariate: every week degenerate.
  EXPECT_TRUE(weekly_correlation_series(f.mape, f.demo, "median_age", ModelKind::LinReg, 1).empty());
}

TEST(MonthlyTable, LayoutAndCells) {
  const auto f = fixture();
  std::vector<CorrelationResult> weekly;
  for (const auto& cov : standard_covariates()) {
    const auto s = weekly_correlation_series(f.mape, f.demo, cov, ModelKind::LinReg, 1);
    weekly.insert(weekly.end(), s.begin(), s.end());
  }
  const auto table =
      monthly_table(weekly, f.mape, f.demo, ModelKind::LinReg, standard_covariates(), {1, 7});
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].month, "2020-04");
  EXPECT_EQ(table.rows[0].cells.size(), 12u);

  const auto* income = table.cell("2020-04", "income", 1);
  ASSERT_NE(income, nullptr);
  EXPECT_EQ(income->n_weeks, 2);
  EXPECT_DOUBLE_EQ(income->mean_rho, (weekly[0].rho + weekly[1].rho) / 2);
  EXPECT_DOUBLE_EQ(income->pooled_rho, -1.0);
  EXPECT_EQ(income->stars, "***");
  EXPECT_EQ(income->pooled_n, 20);

  const auto* seven = table.cell("2020-04", "income", 7);
  EXPECT_TRUE(std::isnan(seven->mean_rho));
  EXPECT_EQ(seven->stars, "");

  const auto text = format_table(table);
  EXPECT_NE(text.find("Income 1d"), std::string::npos);
  EXPECT_NE(text.find("Age 7d"), std::string::npos);
  EXPECT_NE(text.find("-1.00***"), std::string::npos);
}

TEST(MonthlyTable, SingleWeekMonthEqualsThatWeek) {
  CorrelationResult w;
  w.covariate = "income";
  w.model = ModelKind::LinReg;
  w.horizon = 1;
  w.period_start = parse_date("2020-06-29");  // Thursday is 2020-07-02
  w.rho = -0.37;
  const std::vector<CorrelationResult> weekly{w};
  const auto table = monthly_table(weekly, {}, {}, ModelKind::LinReg, {"income"}, {1});
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].month, "2020-07");
  EXPECT_DOUBLE_EQ(table.rows[0].cells[0].mean_rho, -0.37);
}

TEST(Output, CsvFiles) {
  const auto f = fixture();
  const auto weekly = weekly_correlation_series(f.mape, f.demo, "income", ModelKind::LinReg, 1);
  const auto table = monthly_table(weekly, f.mape, f.demo, ModelKind::LinReg, {"income"}, {1, 7});
  testing_support::TempDir dir;
  write_weekly_correlations(dir.path() / "w.csv", weekly);
  const std::vector<FairnessTable> tables{table};
  write_monthly_tables(dir.path() / "m.csv", tables);
  const auto w = testing_support::slurp(dir.path() / "w.csv");
  EXPECT_EQ(w.substr(0, w.find('\n')), "model,horizon,covariate,week,rho,p_value,n");
  EXPECT_NE(w.find("linreg,1,income,2020-W15,-1,"), std::string::npos);
  const auto m = testing_support::slurp(dir.path() / "m.csv");
  EXPECT_NE(m.find("linreg,2020-04,income,7,,,0,,,0"), std::string::npos);
}
