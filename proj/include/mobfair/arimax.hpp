#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "mobfair/panel.hpp"

namespace mobfair::arimax {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  friend auto operator<=>(const ArimaOrder&, const ArimaOrder&) = default;
};

struct ArimaxConfig {
  int window_days = 90;
  int exog_lag_days = 21;
  int p_max = 3;
  int d_max = 2;
  int q_max = 3;
  bool include_intercept_when_d0 = true;
  double objective_tol = 1e-8;
  int max_iterations = 500;

  /// Throws InvalidArgument unless window_days > p_max + q_max + 10.
  void validate() const;
};

/// Trial parameters on the differenced scale.
struct ArmaParams {
  std::optional<double> intercept;
  std::optional<double> beta0;
  std::vector<double> phi;
  std::vector<double> theta;
};

struct CssValue {
  double neg_loglik = 0.0;
  double sigma2 = 0.0;
  int n_eff = 0;
};

struct FittedArimax {
  UnitId unit;
  DateIndex origin;
  ArimaOrder order;
  std::vector<double> phi;
  std::vector<double> theta;
  /// Exogenous coefficient; absent when fitted without an exogenous series.
  std::optional<double> beta0;
  std::optional<double> intercept;
  double sigma2 = 0.0;
  double neg_loglik = 0.0;
  double aicc = 0.0;
  int n_eff = 0;
  /// Leading differenced observations the CSS recursion conditioned on.
  int n_cond = 0;
  bool converged = false;
  int iterations = 0;
};

/// d-th order first differences; length shrinks by d.
std::vector<double> difference(std::span<const double> y, int d);

/// Smallest d in 0..d_max minimizing the sample standard deviation of the
/// d-times-differenced series. Throws SeriesTooShort.
int select_difference_order(std::span<const double> y, int d_max);

/// Conditional-sum-of-squares recursion on already differenced, aligned `w`
/// and `z` (z may be empty when there is no exogenous term). Innovations
/// before `condition_on` are zero and those observations are not scored;
/// `condition_on` must be at least p.
CssValue css_evaluate(const ArmaParams& params, std::span<const double> w,
                      std::span<const double> z, int condition_on);

/// Gaussian CSS negative log-likelihood, conditioning on the first p
/// observations. Explosive or otherwise non-finite recursions return +inf.
double css_neg_loglik(const ArmaParams& params, std::span<const double> w,
                      std::span<const double> z, const ArimaOrder& order);

/// k = p + q + 1 (innovation variance) + [beta0] + [intercept].
int parameter_count(const ArimaOrder& order, bool has_exog, bool has_intercept);
/// 2*nll + 2k + 2k(k+1)/(n-k-1); +inf when n <= k + 1.
double aicc(double neg_loglik, int k, int n);

/// Maps unconstrained values to the coefficients of a stationary AR
/// polynomial 1 - a_1 z - ... - a_p z^p via tanh partial autocorrelations.
std::vector<double> pacf_transform(std::span<const double> unconstrained);
/// Moduli of the roots of 1 - sum a_j z^j (AR convention).
std::vector<double> ar_root_moduli(std::span<const double> a);
/// Moduli of the roots of 1 + sum theta_j z^j (MA convention).
std::vector<double> ma_root_moduli(std::span<const double> theta);

/// Fits ARIMAX(order) by CSS on the raw series `y` with optional exogenous
/// series `x` aligned to it. `condition_on` < 0 means "order.p".
FittedArimax fit_arma_css(std::span<const double> y, std::span<const double> x,
                          const ArimaOrder& order, const ArimaxConfig& cfg,
                          int condition_on = -1);

/// Differencing order by the variance heuristic, then a full (p, q) grid
/// ranked by AICc. Every cell conditions on p_max observations so the
/// criteria are comparable. Throws NoConvergedFit.
FittedArimax auto_fit(std::span<const double> y, std::span<const double> x,
                      const ArimaxConfig& cfg);

/// Mean forecasts of y for steps 1..h. `x_history` is the exogenous series
/// used in fitting (empty if none), `x_future` its next h values. Throws
/// HorizonExceedsExogLag when h > exog_lag_days.
std::vector<double> forecast(const FittedArimax& fit, std::span<const double> y,
                             std::span<const double> x_history,
                             std::span<const double> x_future, int h,
                             int exog_lag_days = 21);

}  // namespace mobfair::arimax
