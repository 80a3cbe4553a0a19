#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mobfair/backtest.hpp"
#include "mobfair/panel.hpp"

namespace mobfair::fairness {

/// Rank 1 is the smallest value; ties share the mean of their positions.
/// Throws NonFiniteValue on NaN/inf and InvalidArgument on empty input.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws DegenerateVariable when either
/// input has fewer than two distinct values, InvalidArgument when lengths
/// differ or n < 3.
double spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value from t = rho * sqrt((n-2)/(1-rho^2)) on n-2 degrees of
/// freedom. Returns 0 for |rho| = 1.
double spearman_pvalue(double rho, int n);

/// Two-sided permutation p-value, (1 + #{|rho_perm| >= |rho|}) / (1 + n_perm).
double spearman_permutation_pvalue(std::span<const double> x, std::span<const double> y,
                                   int n_permutations, std::uint64_t seed);

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, "" otherwise.
std::string stars_for(double p_value);

struct CorrelationResult {
  std::string covariate;
  backtest::ModelKind model = backtest::ModelKind::LinReg;
  int horizon = 1;
  std::string period;
  DateIndex period_start;
  double rho = 0.0;
  double p_value = 1.0;
  int n = 0;
};

struct AuditConfig {
  int min_n = 10;
  bool permutation = false;
  int n_permutations = 2000;
  std::uint64_t seed = 0;
};

using Demographics = std::map<UnitId, DemographicRecord>;

/// One Spearman correlation per ISO week between county MAPE and the
/// covariate. Counties missing either value are dropped pairwise; weeks with
/// fewer than min_n counties or a constant variable are skipped and logged.
std::vector<CorrelationResult> weekly_correlation_series(
    std::span<const backtest::MapeEntry> mape, const Demographics& demographics,
    const std::string& covariate, backtest::ModelKind model, int horizon,
    const AuditConfig& cfg = {});

/// Correlation of pooled monthly MAPE against the covariate for one month.
std::optional<CorrelationResult> pooled_monthly_correlation(
    std::span<const backtest::MapeEntry> mape, const Demographics& demographics,
    const std::string& covariate, backtest::ModelKind model, int horizon,
    const std::string& month, const AuditConfig& cfg = {});

struct FairnessCell {
  std::string covariate;
  int horizon = 1;
  double mean_rho = 0.0;  // NaN when no week qualified
  int n_weeks = 0;
  double pooled_rho = 0.0;  // NaN when the pooled correlation is undefined
  double pooled_p = 1.0;
  int pooled_n = 0;
  std::string stars;
};

struct FairnessRow {
  std::string month;  // "2020-04"
  std::vector<FairnessCell> cells;  // covariate-major, horizons within
};

struct FairnessTable {
  backtest::ModelKind model = backtest::ModelKind::LinReg;
  std::vector<std::string> covariates;
  std::vector<int> horizons;
  std::vector<FairnessRow> rows;

  [[nodiscard]] const FairnessCell* cell(const std::string& month, const std::string& covariate,
                                         int horizon) const;
};

/// Month the ISO week is attributed to (the month of its Thursday).
std::string month_of_week(DateIndex week_start);

/// Cell value is the mean of the month's weekly rho; stars come from the
/// pooled monthly-MAPE correlation.
FairnessTable monthly_table(std::span<const CorrelationResult> weekly,
                            std::span<const backtest::MapeEntry> mape,
                            const Demographics& demographics, backtest::ModelKind model,
                            const std::vector<std::string>& covariates,
                            const std::vector<int>& horizons, const AuditConfig& cfg = {});

/// Short column title used in printed tables ("Income", "NCHS", ...).
std::string covariate_title(const std::string& covariate);
/// Months as rows, covariate x horizon columns, stars appended to each cell.
std::string format_table(const FairnessTable& table);

void write_weekly_correlations(const std::filesystem::path& path,
                               std::span<const CorrelationResult> weekly);
void write_monthly_tables(const std::filesystem::path& path,
                          std::span<const FairnessTable> tables);

}  // namespace mobfair::fairness
