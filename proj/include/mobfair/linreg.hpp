#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mobfair/panel.hpp"

namespace mobfair::linreg {

struct LagBand {
  int lag_from = 1;
  int lag_to = 7;
};

/// Mobility lag bands averaged into one regressor each.
struct LagSpec {
  std::vector<LagBand> bands{{1, 7}, {8, 14}, {15, 21}};

  /// Throws InvalidArgument unless bands are ascending, non-overlapping and
  /// start at lag >= 1.
  void validate() const;
  [[nodiscard]] int max_lag() const { return bands.empty() ? 0 : bands.back().lag_to; }
};

struct LinRegConfig {
  int window_days = 21;
  int shift_days = 1;
  bool include_intercept = false;
  std::int64_t min_cumulative = 1;
  /// Hold the last observed week's mean mobility for days past the origin.
  bool freeze_mobility = false;
  double max_condition = 1e12;
};

struct FittedLinReg {
  UnitId unit;
  DateIndex origin;
  LagSpec spec;
  std::vector<double> betas;
  std::optional<double> intercept;
  double residual_sd = 0.0;
  int n_obs = 0;
  double condition = 1.0;
};

struct OlsSolution {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  double condition = 1.0;
};

/// Least squares by column-pivoted Householder QR. Throws SingularDesign when
/// the 2-norm condition estimate of `design` exceeds `max_condition`.
OlsSolution least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                          double max_condition = 1e12);

/// Distributed-lag OLS of log cumulative growth on lag-band mobility averages
/// over the window ending at index `origin`. `cumulative` is taken as real so
/// unrounded series can be fitted as well.
FittedLinReg fit_distributed_lag(std::span<const double> cumulative,
                                 std::span<const double> change, std::ptrdiff_t origin,
                                 const LagSpec& spec, const LinRegConfig& cfg);

FittedLinReg fit_distributed_lag(const PanelDataset& panel, std::size_t unit, DateIndex origin,
                                 const LagSpec& spec, const LinRegConfig& cfg);

/// Predicted log growth for origin+1 .. origin+horizon.
std::vector<double> predict_growth_path(const FittedLinReg& fit, std::span<const double> change,
                                        std::ptrdiff_t origin, int horizon,
                                        bool freeze_mobility = false);

std::vector<double> predict_growth_path(const FittedLinReg& fit, const PanelDataset& panel,
                                        std::size_t unit, int horizon,
                                        bool freeze_mobility = false);

struct ForecastTarget {
  int horizon = 1;
  double predicted_cumulative = 0.0;
  double predicted_incident = 0.0;
};

/// Compounds a growth path from the origin's cumulative count. Incident
/// targets are measured against the origin: I_hat(origin+h) - I(origin).
std::vector<ForecastTarget> forecast_targets(double cumulative_at_origin,
                                             std::span<const double> growth_path,
                                             std::span<const int> horizons);

std::vector<ForecastTarget> forecast_targets(const FittedLinReg& fit, const PanelDataset& panel,
                                             std::size_t unit, std::span<const int> horizons,
                                             bool freeze_mobility = false);

}  // namespace mobfair::linreg
