#include "mobfair/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mobfair/error.hpp"

namespace mobfair::linreg {

void LagSpec::validate() const {
  if (bands.empty()) throw Error(ErrorCode::InvalidArgument, "lag spec has no bands");
  int prev_to = 0;
  for (const auto& b : bands) {
    if (b.lag_from < 1 || b.lag_to < b.lag_from || b.lag_from <= prev_to) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("lag band {}-{} is not ascending/non-overlapping", b.lag_from,
                              b.lag_to));
    }
    prev_to = b.lag_to;
  }
}

OlsSolution least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                          double max_condition) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(condition <= max_condition)) {
    throw Error(ErrorCode::SingularDesign,
                fmt::format("design condition estimate {:.3g} exceeds {:.3g}", condition,
                            max_condition));
  }
  OlsSolution out;
  out.coef = design.colPivHouseholderQr().solve(response);
  out.residuals = response - design * out.coef;
  out.condition = condition;
  return out;
}

namespace {

double band_average(std::span<const double> change, std::ptrdiff_t t, const LagBand& b,
                    std::ptrdiff_t origin, std::optional<double> frozen) {
  if (!frozen || t - b.lag_from <= origin) {
    return lag_window_average(change, t, b.lag_from, b.lag_to);
  }
  // Observed days up to the origin, the frozen level after it.
  double sum = 0.0;
  for (std::ptrdiff_t d = t - b.lag_to; d <= t - b.lag_from; ++d) {
    if (d > origin) {
      sum += *frozen;
    } else {
      if (d < 0) {
        throw Error(ErrorCode::InsufficientHistory,
                    fmt::format("lags {}-{} at index {} leave the series", b.lag_from, b.lag_to, t));
      }
      sum += change[static_cast<std::size_t>(d)];
    }
  }
  return sum / static_cast<double>(b.lag_to - b.lag_from + 1);
}

}  // namespace

FittedLinReg fit_distributed_lag(std::span<const double> cumulative,
                                 std::span<const double> change, std::ptrdiff_t origin,
                                 const LagSpec& spec, const LinRegConfig& cfg) {
  spec.validate();
  const auto n_series = static_cast<std::ptrdiff_t>(cumulative.size());
  if (change.size() != cumulative.size()) {
    throw Error(ErrorCode::InvalidArgument, "case and mobility series differ in length");
  }
  if (origin < 0 || origin >= n_series) {
    throw Error(ErrorCode::InsufficientData, fmt::format("origin index {} outside series", origin));
  }
  const int k = static_cast<int>(spec.bands.size()) + (cfg.include_intercept ? 1 : 0);
  if (cfg.window_days < k + 2) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("window of {} days cannot fit {} regressors", cfg.window_days, k));
  }
  const double floor = std::max<double>(1.0, static_cast<double>(cfg.min_cumulative));

  std::vector<std::ptrdiff_t> days;
  for (std::ptrdiff_t t = origin - cfg.window_days + 1; t <= origin; ++t) {
    if (t < 1 || t - spec.max_lag() < 0) continue;
    if (!(cumulative[t] >= floor) || !(cumulative[t - 1] >= floor)) continue;
    days.push_back(t);
  }
  const auto n = static_cast<Eigen::Index>(days.size());
  if (n < k + 2) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("{} valid day(s) in the training window, need {}", n, k + 2));
  }

  Eigen::MatrixXd design(n, k);
  Eigen::VectorXd response(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto t = days[static_cast<std::size_t>(r)];
    for (std::size_t b = 0; b < spec.bands.size(); ++b) {
      design(r, static_cast<Eigen::Index>(b)) =
          lag_window_average(change, t, spec.bands[b].lag_from, spec.bands[b].lag_to);
    }
    if (cfg.include_intercept) design(r, k - 1) = 1.0;
    response(r) = std::log(cumulative[t]) - std::log(cumulative[t - 1]);
  }
  if (!design.allFinite()) {
    throw Error(ErrorCode::InsufficientData, "mobility missing inside the training window");
  }

  const auto sol = least_squares(design, response, cfg.max_condition);
  FittedLinReg fit;
  fit.spec = spec;
  fit.betas.assign(sol.coef.data(), sol.coef.data() + spec.bands.size());
  if (cfg.include_intercept) fit.intercept = sol.coef(k - 1);
  fit.n_obs = static_cast<int>(n);
  fit.residual_sd = std::sqrt(sol.residuals.squaredNorm() / static_cast<double>(n - k));
  fit.condition = sol.condition;
  return fit;
}

FittedLinReg fit_distributed_lag(const PanelDataset& panel, std::size_t unit, DateIndex origin,
                                 const LagSpec& spec, const LinRegConfig& cfg) {
  const auto& u = panel.unit(unit);
  std::vector<double> cumulative(u.cumulative.begin(), u.cumulative.end());
  auto fit = fit_distributed_lag(cumulative, u.change, panel.index_of(origin), spec, cfg);
  fit.unit = u.id;
  fit.origin = origin;
  return fit;
}

std::vector<double> predict_growth_path(const FittedLinReg& fit, std::span<const double> change,
                                        std::ptrdiff_t origin, int horizon,
                                        bool freeze_mobility) {
  std::optional<double> frozen;
  if (freeze_mobility) {
    if (origin - 6 < 0 || origin >= static_cast<std::ptrdiff_t>(change.size())) {
      throw Error(ErrorCode::InsufficientHistory, "no full week of mobility before the origin");
    }
    frozen = std::accumulate(change.begin() + (origin - 6), change.begin() + origin + 1, 0.0) / 7.0;
  }
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
  for (int step = 1; step <= horizon; ++step) {
    const std::ptrdiff_t t = origin + step;
    double g = fit.intercept.value_or(0.0);
    for (std::size_t b = 0; b < fit.spec.bands.size(); ++b) {
      g += fit.betas[b] * band_average(change, t, fit.spec.bands[b], origin, frozen);
    }
    path.push_back(g);
  }
  return path;
}

std::vector<double> predict_growth_path(const FittedLinReg& fit, const PanelDataset& panel,
                                        std::size_t unit, int horizon, bool freeze_mobility) {
  return predict_growth_path(fit, panel.unit(unit).change, panel.index_of(fit.origin), horizon,
                             freeze_mobility);
}

std::vector<ForecastTarget> forecast_targets(double cumulative_at_origin,
                                             std::span<const double> growth_path,
                                             std::span<const int> horizons) {
  if (!(cumulative_at_origin > 0.0)) {
    throw Error(ErrorCode::InsufficientData, "cumulative count at the origin is zero");
  }
  std::vector<ForecastTarget> out;
  for (int h : horizons) {
    if (h < 1 || h > static_cast<int>(growth_path.size())) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("horizon {} beyond growth path of length {}", h, growth_path.size()));
    }
    const double log_growth = std::accumulate(growth_path.begin(), growth_path.begin() + h, 0.0);
    const double level = cumulative_at_origin * std::exp(log_growth);
    out.push_back({h, level, level - cumulative_at_origin});
  }
  return out;
}

std::vector<ForecastTarget> forecast_targets(const FittedLinReg& fit, const PanelDataset& panel,
                                             std::size_t unit, std::span<const int> horizons,
                                             bool freeze_mobility) {
  const int max_h = horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
  const auto path = predict_growth_path(fit, panel, unit, max_h, freeze_mobility);
  const auto origin_idx = static_cast<std::size_t>(panel.index_of(fit.origin));
  return forecast_targets(static_cast<double>(panel.unit(unit).cumulative.at(origin_idx)), path,
                          horizons);
}

}  // namespace mobfair::linreg
