#include "mobfair/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include "csv.hpp"
#include "mobfair/error.hpp"
#include "mobfair/log.hpp"

namespace mobfair::fairness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

bool has_two_distinct(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "cannot rank an empty list");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite value in ranking");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "length mismatch");
  if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "spearman needs n >= 3");
  if (!has_two_distinct(x) || !has_two_distinct(y)) {
    throw Error(ErrorCode::DegenerateVariable, "constant input, correlation undefined");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double spearman_pvalue(double rho, int n) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "p-value needs n >= 3");
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = n - 2;
  const double t2 = rho * rho * df / (1.0 - rho * rho);
  // Two-sided tail of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
}

double spearman_permutation_pvalue(std::span<const double> x, std::span<const double> y,
                                   int n_permutations, std::uint64_t seed) {
  const double observed = std::abs(spearman(x, y));
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  std::mt19937_64 rng(seed);
  int extreme = 0;
  for (int i = 0; i < n_permutations; ++i) {
    std::shuffle(ry.begin(), ry.end(), rng);
    if (std::abs(pearson(rx, ry)) >= observed - 1e-12) ++extreme;
  }
  return (1.0 + extreme) / (1.0 + n_permutations);
}

std::string stars_for(double p_value) {
  if (!(p_value >= 0.0)) return "";
  if (p_value < 0.001) return "***";
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

namespace {

std::optional<CorrelationResult> correlate(const std::vector<const backtest::MapeEntry*>& group,
                                           const Demographics& demographics,
                                           const std::string& covariate, const AuditConfig& cfg,
                                           std::string_view what) {
  std::vector<double> err;
  std::vector<double> cov;
  for (const auto* m : group) {
    auto it = demographics.find(m->unit);
    if (it == demographics.end()) continue;
    const auto v = covariate_value(it->second, covariate);
    if (!v || !std::isfinite(*v) || !std::isfinite(m->mape)) continue;
    err.push_back(m->mape);
    cov.push_back(*v);
  }
  const int n = static_cast<int>(err.size());
  if (n < std::max(cfg.min_n, 3)) {
    log().info("{} {}: {} counties with data, need {}", what, covariate, n, cfg.min_n);
    return std::nullopt;
  }
  CorrelationResult r;
  try {
    r.rho = spearman(err, cov);
  } catch (const Error& e) {
    log().info("{} {}: {}", what, covariate, e.what());
    return std::nullopt;
  }
  r.p_value = cfg.permutation ? spearman_permutation_pvalue(err, cov, cfg.n_permutations, cfg.seed)
                              : spearman_pvalue(r.rho, n);
  r.n = n;
  r.covariate = covariate;
  return r;
}

}  // namespace

std::vector<CorrelationResult> weekly_correlation_series(
    std::span<const backtest::MapeEntry> mape, const Demographics& demographics,
    const std::string& covariate, backtest::ModelKind model, int horizon,
    const AuditConfig& cfg) {
  std::map<DateIndex, std::vector<const backtest::MapeEntry*>> weeks;
  for (const auto& m : mape) {
    if (m.model == model && m.horizon == horizon && m.period_type == backtest::PeriodType::Week) {
      weeks[m.period_start].push_back(&m);
    }
  }
  std::vector<CorrelationResult> out;
  for (const auto& [start, group] : weeks) {
    const auto label = group.front()->period;
    auto r = correlate(group, demographics, covariate, cfg,
                       fmt::format("{} h={} week {}", backtest::model_label(model), horizon, label));
    if (!r) continue;
    r->model = model;
    r->horizon = horizon;
    r->period = label;
    r->period_start = start;
    out.push_back(std::move(*r));
  }
  return out;
}

std::optional<CorrelationResult> pooled_monthly_correlation(
    std::span<const backtest::MapeEntry> mape, const Demographics& demographics,
    const std::string& covariate, backtest::ModelKind model, int horizon,
    const std::string& month, const AuditConfig& cfg) {
  std::vector<const backtest::MapeEntry*> group;
  for (const auto& m : mape) {
    if (m.model == model && m.horizon == horizon &&
        m.period_type == backtest::PeriodType::Month && m.period == month) {
      group.push_back(&m);
    }
  }
  if (group.empty()) return std::nullopt;
  auto r = correlate(group, demographics, covariate, cfg,
                     fmt::format("{} h={} month {}", backtest::model_label(model), horizon, month));
  if (!r) return std::nullopt;
  r->model = model;
  r->horizon = horizon;
  r->period = month;
  r->period_start = group.front()->period_start;
  return r;
}

std::string month_of_week(DateIndex week_start) { return month_label(week_start + 3); }

const FairnessCell* FairnessTable::cell(const std::string& month, const std::string& covariate,
                                        int horizon) const {
  for (const auto& row : rows) {
    if (row.month != month) continue;
    for (const auto& c : row.cells) {
      if (c.covariate == covariate && c.horizon == horizon) return &c;
    }
  }
  return nullptr;
}

FairnessTable monthly_table(std::span<const CorrelationResult> weekly,
                            std::span<const backtest::MapeEntry> mape,
                            const Demographics& demographics, backtest::ModelKind model,
                            const std::vector<std::string>& covariates,
                            const std::vector<int>& horizons, const AuditConfig& cfg) {
  FairnessTable table;
  table.model = model;
  table.covariates = covariates;
  table.horizons = horizons;

  std::set<std::string> months;
  for (const auto& w : weekly) {
    if (w.model == model) months.insert(month_of_week(w.period_start));
  }
  for (const auto& month : months) {
    FairnessRow row;
    row.month = month;
    for (const auto& cov : covariates) {
      for (int h : horizons) {
        FairnessCell cell;
        cell.covariate = cov;
        cell.horizon = h;
        double sum = 0.0;
        for (const auto& w : weekly) {
          if (w.model == model && w.covariate == cov && w.horizon == h &&
              month_of_week(w.period_start) == month) {
            sum += w.rho;
            ++cell.n_weeks;
          }
        }
        cell.mean_rho = cell.n_weeks > 0 ? sum / cell.n_weeks : kNaN;
        if (auto pooled = pooled_monthly_correlation(mape, demographics, cov, model, h, month, cfg)) {
          cell.pooled_rho = pooled->rho;
          cell.pooled_p = pooled->p_value;
          cell.pooled_n = pooled->n;
          cell.stars = stars_for(pooled->p_value);
        } else {
          cell.pooled_rho = kNaN;
          cell.pooled_p = kNaN;
        }
        row.cells.push_back(std::move(cell));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string covariate_title(const std::string& covariate) {
  static const std::map<std::string, std::string> titles{
      {"income", "Income"},       {"smartphone_pct", "Smartphone"}, {"population", "Population"},
      {"education_pct", "Education"}, {"nchs", "NCHS"},            {"median_age", "Age"}};
  auto it = titles.find(covariate);
  return it == titles.end() ? covariate : it->second;
}

std::string format_table(const FairnessTable& table) {
  std::string out = fmt::format("{:<10}", backtest::model_label(table.model));
  for (const auto& cov : table.covariates) {
    for (int h : table.horizons) {
      out += fmt::format(" {:>12}", fmt::format("{} {}d", covariate_title(cov), h));
    }
  }
  out += '\n';
  for (const auto& row : table.rows) {
    out += fmt::format("{:<10}", row.month);
    for (const auto& c : row.cells) {
      const std::string v =
          std::isnan(c.mean_rho) ? std::string("-") : fmt::format("{:.2f}{}", c.mean_rho, c.stars);
      out += fmt::format(" {:>12}", v);
    }
    out += '\n';
  }
  return out;
}

void write_weekly_correlations(const std::filesystem::path& path,
                               std::span<const CorrelationResult> weekly) {
  auto out = csv::open_for_write(path);
  out << "model,horizon,covariate,week,rho,p_value,n\n";
  for (const auto& w : weekly) {
    out << fmt::format("{},{},{},{},{},{},{}\n", backtest::model_label(w.model), w.horizon,
                       w.covariate, w.period, w.rho, w.p_value, w.n);
  }
  csv::finish(out, path);
}

void write_monthly_tables(const std::filesystem::path& path,
                          std::span<const FairnessTable> tables) {
  auto out = csv::open_for_write(path);
  out << "model,month,covariate,horizon,rho,stars,n_weeks,pooled_rho,pooled_p,pooled_n\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); };
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      for (const auto& c : row.cells) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", backtest::model_label(t.model),
                           row.month, c.covariate, c.horizon, num(c.mean_rho), c.stars, c.n_weeks,
                           num(c.pooled_rho), num(c.pooled_p), c.pooled_n);
      }
    }
  }
  csv::finish(out, path);
}

}  // namespace mobfair::fairness
