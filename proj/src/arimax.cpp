#include "mobfair/arimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mobfair/error.hpp"
#include "mobfair/optim.hpp"

namespace mobfair::arimax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;
// Partial autocorrelations are kept inside [-kPacfBound, kPacfBound] so that
// fitted polynomials stay strictly inside the stationary/invertible region.
constexpr double kPacfBound = 0.9999;
constexpr double kRootMargin = 1.0 + 1e-6;

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Inverse of pacf_transform: AR coefficients -> partial autocorrelations.
std::vector<double> coefficients_to_pacf(std::vector<double> a) {
  const std::size_t p = a.size();
  std::vector<double> r(p);
  for (std::size_t k = p; k-- > 0;) {
    const double rk = a[k];
    r[k] = rk;
    if (k == 0) break;
    const double denom = 1.0 - rk * rk;
    std::vector<double> prev(k);
    for (std::size_t j = 0; j < k; ++j) prev[j] = (a[j] + rk * a[k - 1 - j]) / denom;
    a.assign(prev.begin(), prev.end());
  }
  return r;
}

std::vector<double> reciprocal_root_moduli(std::span<const double> a) {
  const auto p = static_cast<Eigen::Index>(a.size());
  if (p == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = a[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < p; ++i) out.push_back(std::abs(es.eigenvalues()(i)));
  return out;
}

// Residual recursion shared by the objective and the forecaster. Returns the
// innovation sum of squares; fills `e` when non-null.
double css_recursion(const ArmaParams& params, std::span<const double> w,
                     std::span<const double> z, int condition_on, std::vector<double>* e_out) {
  const auto n = static_cast<int>(w.size());
  const auto p = static_cast<int>(params.phi.size());
  const auto q = static_cast<int>(params.theta.size());
  const double c = params.intercept.value_or(0.0);
  const double b = params.beta0.value_or(0.0);
  const bool exog = params.beta0.has_value();
  thread_local std::vector<double> buffer;
  std::vector<double>& e = e_out ? *e_out : buffer;
  e.assign(static_cast<std::size_t>(n), 0.0);
  double ss = 0.0;
  for (int t = condition_on; t < n; ++t) {
    double pred = c;
    if (exog) pred += b * z[t];
    for (int j = 1; j <= p; ++j) pred += params.phi[j - 1] * w[t - j];
    for (int j = 1; j <= q && t - j >= 0; ++j) pred += params.theta[j - 1] * e[t - j];
    const double et = w[t] - pred;
    e[t] = et;
    ss += et * et;
  }
  return ss;
}

}  // namespace

void ArimaxConfig::validate() const {
  if (p_max < 0 || d_max < 0 || q_max < 0) {
    throw Error(ErrorCode::InvalidArgument, "order caps must be non-negative");
  }
  if (window_days <= p_max + q_max + 10) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("window of {} days too short for caps p={} q={}", window_days, p_max,
                            q_max));
  }
  if (exog_lag_days < 1) throw Error(ErrorCode::InvalidArgument, "exog lag must be >= 1");
}

std::vector<double> difference(std::span<const double> y, int d) {
  std::vector<double> out(y.begin(), y.end());
  for (int k = 0; k < d && !out.empty(); ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  return out;
}

int select_difference_order(std::span<const double> y, int d_max) {
  if (static_cast<int>(y.size()) <= d_max + 10) {
    throw Error(ErrorCode::SeriesTooShort,
                fmt::format("{} observations, need more than {}", y.size(), d_max + 10));
  }
  int best_d = 0;
  double best_sd = sd_of(y);
  for (int d = 1; d <= d_max; ++d) {
    const double sd = sd_of(difference(y, d));
    // Near-equal spreads count as ties and keep the smaller order.
    if (sd < best_sd - 1e-12 * std::max(1.0, best_sd)) {
      best_sd = sd;
      best_d = d;
    }
  }
  return best_d;
}

CssValue css_evaluate(const ArmaParams& params, std::span<const double> w,
                      std::span<const double> z, int condition_on) {
  if (condition_on < static_cast<int>(params.phi.size())) {
    throw Error(ErrorCode::InvalidArgument, "must condition on at least p observations");
  }
  if (params.beta0 && z.size() != w.size()) {
    throw Error(ErrorCode::InvalidArgument, "exogenous series misaligned");
  }
  CssValue out;
  out.n_eff = static_cast<int>(w.size()) - condition_on;
  if (out.n_eff <= 0) throw Error(ErrorCode::SeriesTooShort, "nothing left after conditioning");
  const double ss = css_recursion(params, w, z, condition_on, nullptr);
  out.sigma2 = ss / out.n_eff;
  if (!std::isfinite(out.sigma2)) {
    out.neg_loglik = kInf;
    return out;
  }
  const double s2 = std::max(out.sigma2, std::numeric_limits<double>::min());
  out.neg_loglik = 0.5 * out.n_eff * (std::log(kTwoPi * s2) + 1.0);
  return out;
}

double css_neg_loglik(const ArmaParams& params, std::span<const double> w,
                      std::span<const double> z, const ArimaOrder& order) {
  if (static_cast<int>(params.phi.size()) != order.p ||
      static_cast<int>(params.theta.size()) != order.q) {
    throw Error(ErrorCode::InvalidArgument, "parameter vector does not match the order");
  }
  const double v = css_evaluate(params, w, z, order.p).neg_loglik;
  return std::isfinite(v) ? v : kInf;
}

int parameter_count(const ArimaOrder& order, bool has_exog, bool has_intercept) {
  return order.p + order.q + 1 + (has_exog ? 1 : 0) + (has_intercept ? 1 : 0);
}

double aicc(double neg_loglik, int k, int n) {
  if (n - k - 1 <= 0) return kInf;
  return 2.0 * neg_loglik + 2.0 * k + 2.0 * k * (k + 1) / static_cast<double>(n - k - 1);
}

std::vector<double> pacf_transform(std::span<const double> unconstrained) {
  const std::size_t p = unconstrained.size();
  std::vector<double> a;
  a.reserve(p);
  std::vector<double> next;
  for (std::size_t k = 0; k < p; ++k) {
    const double r = std::clamp(std::tanh(unconstrained[k]), -kPacfBound, kPacfBound);
    next.assign(k + 1, 0.0);
    for (std::size_t j = 0; j < k; ++j) next[j] = a[j] - r * a[k - 1 - j];
    next[k] = r;
    a.swap(next);
  }
  return a;
}

std::vector<double> ar_root_moduli(std::span<const double> a) {
  auto recip = reciprocal_root_moduli(a);
  for (auto& m : recip) m = m > 0.0 ? 1.0 / m : kInf;
  return recip;
}

std::vector<double> ma_root_moduli(std::span<const double> theta) {
  std::vector<double> a(theta.size());
  std::transform(theta.begin(), theta.end(), a.begin(), [](double t) { return -t; });
  return ar_root_moduli(a);
}

FittedArimax fit_arma_css(std::span<const double> y, std::span<const double> x,
                          const ArimaOrder& order, const ArimaxConfig& cfg, int condition_on) {
  if (order.p < 0 || order.d < 0 || order.q < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative ARIMA order");
  }
  const bool has_exog = !x.empty();
  if (has_exog && x.size() != y.size()) {
    throw Error(ErrorCode::InvalidArgument, "exogenous series must align with the target");
  }
  const bool has_intercept = order.d == 0 && cfg.include_intercept_when_d0;
  const int cond = condition_on < 0 ? order.p : condition_on;
  if (cond < order.p) throw Error(ErrorCode::InvalidArgument, "condition_on < p");

  const auto w = difference(y, order.d);
  const auto z = has_exog ? difference(x, order.d) : std::vector<double>{};
  const int k = parameter_count(order, has_exog, has_intercept);
  const int n_eff = static_cast<int>(w.size()) - cond;
  if (n_eff <= k + 1) {
    throw Error(ErrorCode::SeriesTooShort,
                fmt::format("{} usable observations for {} parameters", n_eff, k));
  }

  // Work on standardized data; the optimizer's steps are then scale-free.
  const double w_scale = sd_of(w) > 0.0 ? sd_of(w) : 1.0;
  const double z_scale = has_exog && sd_of(z) > 0.0 ? sd_of(z) : 1.0;
  std::vector<double> ws(w.size()), zs(z.size());
  std::transform(w.begin(), w.end(), ws.begin(), [&](double v) { return v / w_scale; });
  std::transform(z.begin(), z.end(), zs.begin(), [&](double v) { return v / z_scale; });

  // Start from the least-squares fit of the AR/exog/intercept part (exact
  // CSS optimum when q = 0), MA terms at zero.
  const int n_reg = order.p + (has_exog ? 1 : 0) + (has_intercept ? 1 : 0);
  std::vector<double> ar_start(static_cast<std::size_t>(order.p), 0.0);
  double c_start = has_intercept ? mean_of(ws) : 0.0;
  double b_start = 0.0;
  if (n_reg > 0) {
    Eigen::MatrixXd design(n_eff, n_reg);
    Eigen::VectorXd resp(n_eff);
    for (int r = 0; r < n_eff; ++r) {
      const int t = cond + r;
      int col = 0;
      if (has_intercept) design(r, col++) = 1.0;
      if (has_exog) design(r, col++) = zs[t];
      for (int j = 1; j <= order.p; ++j) design(r, col++) = ws[t - j];
      resp(r) = ws[t];
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(resp);
    if (coef.allFinite()) {
      int col = 0;
      if (has_intercept) c_start = coef(col++);
      if (has_exog) b_start = coef(col++);
      for (int j = 0; j < order.p; ++j) ar_start[j] = coef(col++);
    }
  }
  std::vector<double> x0;
  if (has_intercept) x0.push_back(c_start);
  if (has_exog) x0.push_back(b_start);
  {
    const auto moduli = ar_root_moduli(ar_start);
    const bool stationary = std::all_of(moduli.begin(), moduli.end(),
                                        [](double m) { return m > kRootMargin; });
    auto r = stationary ? coefficients_to_pacf(ar_start) : std::vector<double>(order.p, 0.0);
    for (double rj : r) x0.push_back(std::atanh(std::clamp(rj, -kPacfBound, kPacfBound)));
  }
  for (int j = 0; j < order.q; ++j) x0.push_back(0.0);

  auto unpack = [&](std::span<const double> v) {
    ArmaParams prm;
    std::size_t i = 0;
    if (has_intercept) prm.intercept = v[i++];
    if (has_exog) prm.beta0 = v[i++];
    prm.phi = pacf_transform(v.subspan(i, static_cast<std::size_t>(order.p)));
    i += static_cast<std::size_t>(order.p);
    const auto ma = pacf_transform(v.subspan(i, static_cast<std::size_t>(order.q)));
    prm.theta.resize(ma.size());
    std::transform(ma.begin(), ma.end(), prm.theta.begin(), [](double a) { return -a; });
    return prm;
  };
  const optim::Objective objective = [&](std::span<const double> v) {
    return css_evaluate(unpack(v), ws, zs, cond).neg_loglik;
  };
  optim::NelderMeadOptions nm;
  nm.f_tol = cfg.objective_tol;
  nm.max_iterations = cfg.max_iterations;
  nm.initial_step.assign(x0.size(), 0.1);
  const auto res = optim::nelder_mead(objective, x0, nm);

  ArmaParams best = unpack(res.x);
  if (best.intercept) *best.intercept *= w_scale;
  if (best.beta0) *best.beta0 *= w_scale / z_scale;

  FittedArimax fit;
  fit.order = order;
  fit.phi = best.phi;
  fit.theta = best.theta;
  fit.beta0 = best.beta0;
  fit.intercept = best.intercept;
  const auto value = css_evaluate(best, w, z, cond);
  fit.sigma2 = std::max(value.sigma2, std::numeric_limits<double>::min());
  fit.neg_loglik = value.neg_loglik;
  fit.n_eff = value.n_eff;
  fit.n_cond = cond;
  fit.aicc = aicc(fit.neg_loglik, k, fit.n_eff);
  fit.iterations = res.iterations;

  const auto ar_mod = ar_root_moduli(fit.phi);
  const auto ma_mod = ma_root_moduli(fit.theta);
  const bool inside = std::all_of(ar_mod.begin(), ar_mod.end(),
                                  [](double m) { return m > kRootMargin; }) &&
                      std::all_of(ma_mod.begin(), ma_mod.end(),
                                  [](double m) { return m > kRootMargin; });
  fit.converged = res.converged && inside && std::isfinite(fit.neg_loglik);
  return fit;
}

FittedArimax auto_fit(std::span<const double> y, std::span<const double> x,
                      const ArimaxConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(y.size()) < cfg.window_days) {
    throw Error(ErrorCode::SeriesTooShort,
                fmt::format("{} observations, window needs {}", y.size(), cfg.window_days));
  }
  const int d = select_difference_order(y, cfg.d_max);
  std::optional<FittedArimax> best;
  auto better = [](const FittedArimax& a, const FittedArimax& b) {
    const double tol = 1e-9 * std::max(1.0, std::abs(b.aicc));
    if (a.aicc < b.aicc - tol) return true;
    if (a.aicc > b.aicc + tol) return false;
    const int sa = a.order.p + a.order.q;
    const int sb = b.order.p + b.order.q;
    if (sa != sb) return sa < sb;
    return a.order.p < b.order.p;
  };
  for (int p = 0; p <= cfg.p_max; ++p) {
    for (int q = 0; q <= cfg.q_max; ++q) {
      FittedArimax fit;
      try {
        fit = fit_arma_css(y, x, {p, d, q}, cfg, cfg.p_max);
      } catch (const Error&) {
        continue;
      }
      if (!fit.converged || !std::isfinite(fit.aicc)) continue;
      if (!best || better(fit, *best)) best = std::move(fit);
    }
  }
  if (!best) {
    throw Error(ErrorCode::NoConvergedFit, fmt::format("no grid cell converged at d={}", d));
  }
  return *best;
}

std::vector<double> forecast(const FittedArimax& fit, std::span<const double> y,
                             std::span<const double> x_history,
                             std::span<const double> x_future, int h, int exog_lag_days) {
  if (h > exog_lag_days) {
    throw Error(ErrorCode::HorizonExceedsExogLag,
                fmt::format("horizon {} exceeds the exogenous lag of {} days", h, exog_lag_days));
  }
  if (h < 1) return {};
  const int d = fit.order.d;
  const bool exog = fit.beta0.has_value();
  if (exog && (x_history.size() != y.size() || static_cast<int>(x_future.size()) < h)) {
    throw Error(ErrorCode::InvalidArgument, "exogenous history/future do not cover the forecast");
  }
  if (static_cast<int>(y.size()) <= d) throw Error(ErrorCode::SeriesTooShort, "history too short");

  const auto w = difference(y, d);
  std::vector<double> z;
  std::vector<double> z_future;
  if (exog) {
    std::vector<double> all(x_history.begin(), x_history.end());
    all.insert(all.end(), x_future.begin(), x_future.begin() + h);
    const auto dz = difference(all, d);
    z.assign(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(w.size()));
    z_future.assign(dz.begin() + static_cast<std::ptrdiff_t>(w.size()), dz.end());
  }

  ArmaParams prm{fit.intercept, fit.beta0, fit.phi, fit.theta};
  std::vector<double> e;
  const int cond = std::min(std::max(fit.n_cond, fit.order.p), static_cast<int>(w.size()));
  css_recursion(prm, w, z, cond, &e);

  const auto n = static_cast<int>(w.size());
  std::vector<double> wx(w);
  wx.resize(static_cast<std::size_t>(n + h), 0.0);
  e.resize(static_cast<std::size_t>(n + h), 0.0);
  const double c = fit.intercept.value_or(0.0);
  for (int k = 0; k < h; ++k) {
    const int t = n + k;
    double pred = c;
    if (exog) pred += *fit.beta0 * z_future[static_cast<std::size_t>(k)];
    for (int j = 1; j <= fit.order.p; ++j) {
      if (t - j >= 0) pred += fit.phi[j - 1] * wx[t - j];
    }
    for (int j = 1; j <= fit.order.q; ++j) {
      if (t - j >= 0) pred += fit.theta[j - 1] * e[t - j];
    }
    wx[t] = pred;
  }
  std::vector<double> out(wx.begin() + n, wx.end());

  // Undo the differencing, innermost level first.
  for (int level = d - 1; level >= 0; --level) {
    const auto base = difference(y, level);
    double running = base.back();
    for (auto& v : out) {
      running += v;
      v = running;
    }
  }
  return out;
}

}  // namespace mobfair::arimax
