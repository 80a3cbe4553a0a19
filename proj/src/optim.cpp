#include "mobfair/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mobfair::optim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> f;
};

}  // namespace

NelderMeadResult nelder_mead(const Objective& objective, std::vector<double> x0,
                             const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  auto eval = [&](std::span<const double> x) {
    ++res.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : kInf;
  };
  if (n == 0) {
    res.x = std::move(x0);
    res.f = eval(res.x);
    res.converged = true;
    return res;
  }
  auto step = [&](std::size_t i) {
    if (opts.initial_step.empty()) return 0.1;
    return opts.initial_step.size() == 1 ? opts.initial_step[0] : opts.initial_step.at(i);
  };

  Simplex s;
  auto build = [&](const std::vector<double>& base, double base_f) {
    s.x.assign(n + 1, base);
    s.f.assign(n + 1, base_f);
    for (std::size_t i = 0; i < n; ++i) {
      s.x[i + 1][i] += step(i);
      s.f[i + 1] = eval(s.x[i + 1]);
    }
  };
  build(x0, eval(x0));

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  bool restarted = false;

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    const double spread = s.f[worst] - s.f[best];
    if (std::isfinite(s.f[best]) && spread <= opts.f_tol * (std::abs(s.f[best]) + opts.f_tol)) {
      if (restarted) {
        res.converged = true;
        break;
      }
      restarted = true;
      const auto base = s.x[best];
      const double base_f = s.f[best];
      build(base, base_f);
      continue;
    }
    if (res.iterations >= opts.max_iterations) break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += s.x[v][i];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) xr[i] = centroid[i] + (centroid[i] - s.x[worst][i]);
    const double fr = eval(xr);
    if (fr < s.f[best]) {
      for (std::size_t i = 0; i < n; ++i) xe[i] = centroid[i] + 2.0 * (centroid[i] - s.x[worst][i]);
      const double fe = eval(xe);
      if (fe < fr) {
        s.x[worst] = xe;
        s.f[worst] = fe;
      } else {
        s.x[worst] = xr;
        s.f[worst] = fr;
      }
      continue;
    }
    if (fr < s.f[second]) {
      s.x[worst] = xr;
      s.f[worst] = fr;
      continue;
    }
    // Contraction, outside when the reflected point beats the worst vertex.
    const bool outside = fr < s.f[worst];
    const auto& toward = outside ? xr : s.x[worst];
    for (std::size_t i = 0; i < n; ++i) xc[i] = centroid[i] + 0.5 * (toward[i] - centroid[i]);
    const double fc = eval(xc);
    if (fc < (outside ? fr : s.f[worst])) {
      s.x[worst] = xc;
      s.f[worst] = fc;
      continue;
    }
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == best) continue;
      for (std::size_t i = 0; i < n; ++i) {
        s.x[v][i] = s.x[best][i] + 0.5 * (s.x[v][i] - s.x[best][i]);
      }
      s.f[v] = eval(s.x[v]);
    }
  }

  const auto best_it = std::min_element(s.f.begin(), s.f.end());
  const auto idx = static_cast<std::size_t>(best_it - s.f.begin());
  res.x = s.x[idx];
  res.f = s.f[idx];
  return res;
}

}  // namespace mobfair::optim
