#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mobfair/commands.hpp"
#include "mobfair/config.hpp"
#include "support/error_code.hpp"
#include "support/temp_dir.hpp"

using namespace mobfair;
using testing_support::code_of;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

const char* kSynth = R"([synth]
seed = 11
n_units = 50
n_days = 120
epidemic_start = 70
placebo_covariate = true
)";

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string config_error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

}  // namespace

TEST(Config, Defaults) {
  const auto cfg = parse_config(std::string(kSynth), "/base");
  ASSERT_TRUE(cfg.synth.has_value());
  EXPECT_FALSE(cfg.data.has_value());
  EXPECT_EQ(cfg.synth->seed, 11u);
  EXPECT_EQ(cfg.synth->n_units, 50);
  EXPECT_TRUE(cfg.synth->placebo_covariate);
  EXPECT_EQ(cfg.spec.models.size(), 2u);
  EXPECT_EQ(cfg.spec.horizons, (std::vector<int>{1, 7}));
  EXPECT_EQ(cfg.spec.linreg.window_days, 21);
  EXPECT_EQ(cfg.spec.arimax.window_days, 90);
  EXPECT_EQ(cfg.audit.min_n, 10);
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("/base/out"));
  EXPECT_EQ(cfg.hash, fnv1a_hex(kSynth));
}

TEST(Config, AllSections) {
  const auto cfg = parse_config(R"(
; comment
[data]
cases = in/cases.csv
mobility = /abs/od.csv
mobility_schema = od
include_self_loops = false
demographics = in/demo.csv
baseline_start = 2020-02-01
baseline_end = 2020-02-29

[run]
models = linreg
horizons = 7
target = cumulative
schedule_start = 2020-04-01
schedule_end = 2020-05-01
schedule_step = 2
output_dir = results
workers = 4
seed = 3
min_obs = 2

[linreg]
window_days = 28
include_intercept = yes
lags = 1-7, 8-14
freeze_mobility = on

[arimax]
p_max = 2
use_exog = false

[audit]
min_n = 5
permutation = true
covariates = income, nchs
mape = other/mape.csv
)",
                                "/cfg");
  ASSERT_TRUE(cfg.data.has_value());
  EXPECT_EQ(cfg.data->cases, std::filesystem::path("/cfg/in/cases.csv"));
  EXPECT_EQ(cfg.data->mobility, std::filesystem::path("/abs/od.csv"));
  EXPECT_EQ(cfg.data->mobility_options.schema, ingest::MobilitySchema::Od);
  EXPECT_FALSE(cfg.data->mobility_options.include_self_loops);
  EXPECT_EQ(cfg.data->baseline.length(), 29);
  EXPECT_EQ(cfg.spec.models, (std::vector<backtest::ModelKind>{backtest::ModelKind::LinReg}));
  EXPECT_EQ(cfg.spec.horizons, (std::vector<int>{7}));
  EXPECT_EQ(cfg.spec.target, backtest::TargetKind::Cumulative);
  EXPECT_EQ(*cfg.schedule_start, parse_date("2020-04-01"));
  EXPECT_EQ(cfg.schedule_step, 2);
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("/cfg/results"));
  EXPECT_EQ(cfg.workers, 4);
  EXPECT_EQ(cfg.audit.seed, 3u);
  EXPECT_EQ(cfg.mape_min_obs, 2);
  EXPECT_EQ(cfg.spec.linreg.window_days, 28);
  EXPECT_TRUE(cfg.spec.linreg.include_intercept);
  EXPECT_TRUE(cfg.spec.linreg.freeze_mobility);
  EXPECT_EQ(cfg.spec.lags.bands.size(), 2u);
  EXPECT_EQ(cfg.spec.lags.bands[1].lag_to, 14);
  EXPECT_EQ(cfg.spec.arimax.p_max, 2);
  EXPECT_FALSE(cfg.spec.arimax_use_exog);
  EXPECT_EQ(cfg.audit.min_n, 5);
  EXPECT_TRUE(cfg.audit.permutation);
  EXPECT_EQ(cfg.covariates, (std::vector<std::string>{"income", "nchs"}));
  EXPECT_EQ(*cfg.mape_path, std::filesystem::path("/cfg/other/mape.csv"));
}

TEST(Config, Errors) {
  EXPECT_NE(config_error_message("[synth]\nn_units = 40\n").find("synth.seed"), std::string::npos);
  EXPECT_NE(config_error_message(std::string(kSynth) + "[run]\nhorizons = 1,3\n").find("horizons"),
            std::string::npos);
  EXPECT_NE(config_error_message(std::string(kSynth) + "[run]\ncolour = red\n").find("run.colour"),
            std::string::npos);
  EXPECT_NE(config_error_message(std::string(kSynth) + "[plots]\nx = 1\n").find("[plots]"),
            std::string::npos);
  EXPECT_NE(config_error_message("[run]\nmodels = both\n").find("exactly one"), std::string::npos);
  config_error_message(std::string(kSynth) + "[run]\nmodels = svm\n");
  config_error_message(std::string(kSynth) + "[run]\nworkers = 0\n");
  config_error_message(std::string(kSynth) + "[audit]\nmin_n = 2\n");
  config_error_message("[synth]\nseed = 1\nn_units = 10\n");
  config_error_message("stray = 1\n" + std::string(kSynth));
  EXPECT_EQ(code_of([] { load_config("/nonexistent/mobfair.ini"); }), ErrorCode::IoFailure);
}

TEST(ExitStatus, Mapping) {
  EXPECT_EQ(exit_status_for(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_status_for(ErrorCode::IoFailure), 3);
  EXPECT_EQ(exit_status_for(ErrorCode::GapInSeries), 4);
  EXPECT_EQ(exit_status_for(ErrorCode::ScheduleOutOfRange), 4);
  EXPECT_EQ(exit_status_for(ErrorCode::NoConvergedFit), 5);
}

class Commands : public ::testing::Test {
 protected:
  CommandOptions write_config(const std::string& text) {
    CommandOptions opts;
    opts.config = dir_.write("run.ini", text);
    return opts;
  }
  std::filesystem::path out() const { return dir_.path() / "out"; }

  TempDir dir_;
  std::ostringstream summary_;
};

TEST_F(Commands, SynthWritesFourFiles) {
  const auto opts = write_config(kSynth);
  EXPECT_EQ(cmd_synth(opts, summary_), kExitOk);
  for (const char* f : {"cases.csv", "mobility.csv", "demographics.csv", "truth.json"}) {
    EXPECT_TRUE(std::filesystem::exists(out() / f)) << f;
  }
  EXPECT_NE(summary_.str().find("50 units"), std::string::npos);
}

TEST_F(Commands, SynthMissingSeedIsConfigError) {
  EXPECT_EQ(cmd_synth(write_config("[synth]\nn_units = 50\n"), summary_), kExitConfig);
  EXPECT_TRUE(summary_.str().empty());
}

TEST_F(Commands, SynthUnwritableDirectoryIsIoError) {
  auto opts = write_config(kSynth);
  const auto blocker = dir_.write("blocker", "x");
  opts.output_dir = blocker / "sub";
  EXPECT_EQ(cmd_synth(opts, summary_), kExitIo);
}

TEST_F(Commands, MissingConfigIsIoError) {
  CommandOptions opts;
  opts.config = dir_.path() / "absent.ini";
  EXPECT_EQ(cmd_backtest(opts, summary_), kExitIo);
}

TEST_F(Commands, SeedOverrideReachesSynth) {
  auto opts = write_config(kSynth);
  opts.seed = 12345;
  opts.workers = 2;
  const auto cfg = resolve_config(opts);
  EXPECT_EQ(cfg.synth->seed, 12345u);
  EXPECT_EQ(cfg.audit.seed, 12345u);
  EXPECT_EQ(cfg.workers, 2);
}

TEST_F(Commands, BacktestLinregCountsAndAudit) {
  const auto opts = write_config(std::string(kSynth) +
                                 "[run]\nmodels = linreg\nschedule_start = 2020-05-01\n"
                                 "schedule_end = 2020-05-21\n[audit]\nmin_n = 5\n");
  ASSERT_EQ(cmd_backtest(opts, summary_), kExitOk);
  const auto forecasts = slurp(out() / "forecasts.csv");
  // 50 units x 21 origins, two horizons each, plus the header.
  EXPECT_EQ(count_lines(forecasts), 1u + 2u * 50u * 21u);
  EXPECT_NE(summary_.str().find("failed 0"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out() / "errors.csv"));
  const auto mape = slurp(out() / "mape.csv");
  EXPECT_NE(mape.find("linreg"), std::string::npos);
  EXPECT_EQ(mape.find("arimax"), std::string::npos);

  std::ostringstream audit_out;
  ASSERT_EQ(cmd_audit(opts, audit_out), kExitOk);
  EXPECT_TRUE(std::filesystem::exists(out() / "weekly_corr.csv"));
  EXPECT_TRUE(std::filesystem::exists(out() / "monthly_table.csv"));
  const auto report = slurp(out() / "report.json");
  EXPECT_NE(report.find(fnv1a_hex(slurp(opts.config))), std::string::npos);
  EXPECT_NE(report.find("\"version\""), std::string::npos);
  EXPECT_NE(audit_out.str().find("Smartphone 1d"), std::string::npos);
  EXPECT_NE(slurp(out() / "monthly_table.csv").find("placebo"), std::string::npos);
}

TEST_F(Commands, BacktestBothModelsLabelsMape) {
  const auto opts = write_config(std::string(kSynth) +
                                 "[run]\nschedule_start = 2020-05-21\nschedule_end = 2020-05-22\n"
                                 "min_obs = 1\n");
  ASSERT_EQ(cmd_backtest(opts, summary_), kExitOk);
  const auto mape = slurp(out() / "mape.csv");
  EXPECT_NE(mape.find("linreg"), std::string::npos);
  EXPECT_NE(mape.find("arimax"), std::string::npos);
}

TEST_F(Commands, BacktestScheduleBeforeDataIsDataError) {
  const auto opts = write_config(std::string(kSynth) +
                                 "[run]\nmodels = linreg\nschedule_start = 2019-12-01\n");
  EXPECT_EQ(cmd_backtest(opts, summary_), kExitData);
}

TEST_F(Commands, BacktestWithoutAnyFitExitsFive) {
  // Every origin sits before any unit has a full training window.
  const auto opts = write_config(std::string(kSynth) +
                                 "[run]\nmodels = linreg\nschedule_start = 2020-02-02\n"
                                 "schedule_end = 2020-02-05\n");
  EXPECT_EQ(cmd_backtest(opts, summary_), kExitNoFits);
}

TEST_F(Commands, AuditWithoutMapeIsDataError) {
  EXPECT_EQ(cmd_audit(write_config(kSynth), summary_), kExitData);
}

TEST_F(Commands, AuditBelowMinNEveryWeekIsDataError) {
  const auto opts = write_config(std::string(kSynth) +
                                 "[run]\nmodels = linreg\nschedule_start = 2020-05-01\n"
                                 "schedule_end = 2020-05-14\n[audit]\nmin_n = 500\n");
  ASSERT_EQ(cmd_backtest(opts, summary_), kExitOk);
  EXPECT_EQ(cmd_audit(opts, summary_), kExitData);
}

TEST_F(Commands, DataSectionPipeline) {
  // Generate files, then run the backtest from them through [data].
  ASSERT_EQ(cmd_synth(write_config(kSynth), summary_), kExitOk);
  const auto gen = out();
  const auto data_dir = dir_.path() / "gen";
  std::filesystem::rename(gen, data_dir);
  const auto opts = write_config(
      "[data]\ncases = gen/cases.csv\nmobility = gen/mobility.csv\n"
      "demographics = gen/demographics.csv\nbaseline_start = 2020-02-01\n"
      "baseline_end = 2020-02-29\n[run]\nmodels = linreg\nschedule_start = 2020-05-01\n"
      "schedule_end = 2020-05-07\n[audit]\nmin_n = 5\n");
  ASSERT_EQ(cmd_backtest(opts, summary_), kExitOk);
  EXPECT_EQ(count_lines(slurp(out() / "forecasts.csv")), 1u + 2u * 50u * 7u);
  EXPECT_EQ(cmd_audit(opts, summary_), kExitOk);
}
