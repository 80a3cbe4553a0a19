#include "mobfair/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "mobfair/log.hpp"

namespace mobfair {

namespace {

template <typename T>
void log_report(const std::string& what, const ingest::Parsed<T>& parsed) {
  for (const auto& [severity, msg] : parsed.report.messages) {
    if (severity == ingest::Severity::Warning) {
      log().warn("{}: {}", what, msg);
    } else {
      log().info("{}: {}", what, msg);
    }
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoFailure,
                fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  }
}

// Runs `body`, mapping errors to exit statuses.
template <typename F>
int guarded(const char* command, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log().error("{}: {}", command, e.what());
    return exit_status_for(e.code());
  } catch (const std::exception& e) {
    log().error("{}: {}", command, e.what());
    return kExitIo;
  }
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return kExitConfig;
    case ErrorCode::IoFailure:
      return kExitIo;
    case ErrorCode::NoConvergedFit:
      return kExitNoFits;
    default:
      return kExitData;
  }
}

RunConfig resolve_config(const CommandOptions& opts) {
  auto cfg = load_config(opts.config);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.audit.seed = *opts.seed;
    if (cfg.synth) cfg.synth->seed = *opts.seed;
  }
  if (opts.workers) {
    if (*opts.workers < 1) throw Error(ErrorCode::ConfigError, "--workers must be positive");
    cfg.workers = *opts.workers;
  }
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  return cfg;
}

PanelDataset load_panel(const RunConfig& cfg) {
  if (cfg.synth) return synth::generate(*cfg.synth).panel();
  const auto& d = *cfg.data;
  auto cases = ingest::parse_cases(d.cases);
  log_report(d.cases.string(), cases);
  auto mobility = ingest::parse_mobility(d.mobility, d.mobility_options);
  log_report(d.mobility.string(), mobility);
  auto demo = ingest::parse_demographics(d.demographics);
  log_report(d.demographics.string(), demo);

  std::map<UnitId, MobilitySeries> normalized_mobility;
  for (auto& [id, series] : mobility.series) {
    try {
      normalized_mobility.emplace(id, normalized(std::move(series), d.baseline));
    } catch (const Error& e) {
      log().warn("dropping unit {}: {}", id.value, e.what());
    }
  }
  BuildReport report;
  auto panel = build_panel(cases.series, normalized_mobility, demo.series, &report);
  return panel;
}

std::map<UnitId, DemographicRecord> load_demographics(const RunConfig& cfg) {
  std::map<UnitId, DemographicRecord> out;
  if (cfg.synth) {
    for (auto& rec : synth::gen_covariates(*cfg.synth)) out.emplace(rec.unit, std::move(rec));
    return out;
  }
  auto demo = ingest::parse_demographics(cfg.data->demographics);
  log_report(cfg.data->demographics.string(), demo);
  return std::move(demo.series);
}

backtest::Schedule default_schedule(const PanelDataset& panel, const backtest::ModelSpec& spec) {
  int need = 0;
  for (auto model : spec.models) {
    if (model == backtest::ModelKind::LinReg) {
      need = std::max(need, spec.linreg.window_days + spec.lags.max_lag());
    } else {
      need = std::max(need, spec.arimax.window_days + spec.arimax.exog_lag_days);
    }
  }
  const int max_h = spec.horizons.empty()
                        ? 0
                        : *std::max_element(spec.horizons.begin(), spec.horizons.end());
  const auto& span = panel.date_span();
  return {span.first + need, span.last - max_h, 1};
}

int cmd_synth(const CommandOptions& opts, std::ostream& out) {
  return guarded("synth", [&] {
    const auto cfg = resolve_config(opts);
    if (!cfg.synth) throw Error(ErrorCode::ConfigError, "synth needs a [synth] section");
    const auto data = synth::generate(*cfg.synth);
    ensure_dir(cfg.output_dir);
    synth::write_dataset(data, cfg.output_dir);
    fmt::print(out, "synth: {} units x {} days (seed {}) written to {}\n", data.cases.size(),
               cfg.synth->n_days, cfg.synth->seed, cfg.output_dir.string());
    return static_cast<int>(kExitOk);
  });
}

int cmd_backtest(const CommandOptions& opts, std::ostream& out) {
  return guarded("backtest", [&] {
    const auto cfg = resolve_config(opts);
    const auto panel = load_panel(cfg);
    auto schedule = default_schedule(panel, cfg.spec);
    if (cfg.schedule_start) schedule.first = *cfg.schedule_start;
    if (cfg.schedule_end) schedule.last = *cfg.schedule_end;
    schedule.step = cfg.schedule_step;

    const auto result = backtest::run_backtest(panel, cfg.spec, schedule, cfg.workers);
    for (const auto& f : result.report.failures) {
      log().info("fit failed: {} {} {}: {}", backtest::model_label(f.model), f.unit.value,
                 format_date(f.origin), f.reason);
    }
    const auto errors = backtest::compute_errors(result.records);
    const auto mape = backtest::all_mape(errors, cfg.mape_min_obs);

    ensure_dir(cfg.output_dir);
    backtest::write_forecasts(cfg.output_dir / "forecasts.csv", result.records);
    backtest::write_errors(cfg.output_dir / "errors.csv", errors);
    backtest::write_mape(cfg.output_dir / "mape.csv", mape);

    fmt::print(out, "backtest: {} units, origins {}..{}, {} tasks\n", panel.size(),
               format_date(schedule.first), format_date(schedule.last), result.report.tasks);
    fmt::print(out, "fits ok {}, failed {}; records {}, skipped (zero actual) {}\n",
               result.report.fits_ok, result.report.fits_failed, result.records.size(),
               errors.skipped.size());
    for (auto model : cfg.spec.models) {
      for (int h : cfg.spec.horizons) {
        double sum = 0.0;
        int n = 0;
        for (const auto& e : errors.errors) {
          if (e.model == model && e.horizon == h) {
            sum += e.error_rate;
            ++n;
          }
        }
        if (n > 0) {
          fmt::print(out, "  {} h={}: mean error rate {:.2f}% over {} forecasts\n",
                     backtest::model_label(model), h, 100.0 * sum / n, n);
        }
      }
    }
    if (result.report.fits_ok == 0) {
      log().error("backtest: no successful fits");
      return static_cast<int>(kExitNoFits);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_audit(const CommandOptions& opts, std::ostream& out) {
  return guarded("audit", [&] {
    const auto cfg = resolve_config(opts);
    const auto mape_path = cfg.mape_path.value_or(cfg.output_dir / "mape.csv");
    if (!std::filesystem::exists(mape_path)) {
      throw Error(ErrorCode::InsufficientData,
                  fmt::format("{} not found; run backtest first", mape_path.string()));
    }
    const auto mape = backtest::read_mape(mape_path);
    const auto demographics = load_demographics(cfg);

    std::vector<std::string> covariates = cfg.covariates;
    if (covariates.empty()) {
      covariates = standard_covariates();
      std::set<std::string> extra;
      for (const auto& [id, rec] : demographics) {
        for (const auto& [name, value] : rec.extra) extra.insert(name);
      }
      covariates.insert(covariates.end(), extra.begin(), extra.end());
    }

    std::set<backtest::ModelKind> models;
    std::set<int> horizon_set;
    for (const auto& m : mape) {
      models.insert(m.model);
      horizon_set.insert(m.horizon);
    }
    const std::vector<int> horizons(horizon_set.begin(), horizon_set.end());

    std::vector<fairness::CorrelationResult> weekly;
    for (auto model : models) {
      for (const auto& cov : covariates) {
        for (int h : horizons) {
          auto series = fairness::weekly_correlation_series(mape, demographics, cov, model, h,
                                                            cfg.audit);
          weekly.insert(weekly.end(), series.begin(), series.end());
        }
      }
    }
    if (weekly.empty()) {
      throw Error(ErrorCode::InsufficientData,
                  fmt::format("no week has at least {} counties with MAPE and covariates",
                              cfg.audit.min_n));
    }
    std::vector<fairness::FairnessTable> tables;
    for (auto model : models) {
      tables.push_back(
          fairness::monthly_table(weekly, mape, demographics, model, covariates, horizons, cfg.audit));
    }

    ensure_dir(cfg.output_dir);
    fairness::write_weekly_correlations(cfg.output_dir / "weekly_corr.csv", weekly);
    fairness::write_monthly_tables(cfg.output_dir / "monthly_table.csv", tables);

    nlohmann::json report;
    report["tool"] = "mobfair";
    report["version"] = MOBFAIR_VERSION;
    report["config_hash"] = cfg.hash;
    report["config"] = opts.config.string();
    report["mape"] = mape_path.string();
    report["min_n"] = cfg.audit.min_n;
    report["p_value_method"] = cfg.audit.permutation ? "permutation" : "t-approximation";
    report["covariates"] = covariates;
    auto& jw = report["weekly"] = nlohmann::json::array();
    for (const auto& w : weekly) {
      jw.push_back({{"model", backtest::model_label(w.model)},
                    {"horizon", w.horizon},
                    {"covariate", w.covariate},
                    {"week", w.period},
                    {"rho", number_or_null(w.rho)},
                    {"p_value", number_or_null(w.p_value)},
                    {"n", w.n}});
    }
    auto& jm = report["monthly"] = nlohmann::json::array();
    for (const auto& t : tables) {
      for (const auto& row : t.rows) {
        for (const auto& c : row.cells) {
          jm.push_back({{"model", backtest::model_label(t.model)},
                        {"month", row.month},
                        {"covariate", c.covariate},
                        {"horizon", c.horizon},
                        {"rho", number_or_null(c.mean_rho)},
                        {"stars", c.stars},
                        {"n_weeks", c.n_weeks},
                        {"pooled_rho", number_or_null(c.pooled_rho)},
                        {"pooled_p", number_or_null(c.pooled_p)},
                        {"pooled_n", c.pooled_n}});
        }
      }
    }
    auto json_out = csv::open_for_write(cfg.output_dir / "report.json");
    json_out << report.dump(2) << '\n';
    csv::finish(json_out, cfg.output_dir / "report.json");

    fmt::print(out, "audit: {} weekly correlations over {} covariates\n", weekly.size(),
               covariates.size());
    for (const auto& t : tables) fmt::print(out, "\n{}", fairness::format_table(t));
    return static_cast<int>(kExitOk);
  });
}

}  // namespace mobfair
